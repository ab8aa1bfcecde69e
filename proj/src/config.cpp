#include "hallucmap/config.hpp"

#include <cstdlib>
#include <sstream>

#include "json_io.hpp"

namespace hallucmap {

namespace {

using detail::json;

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    json& child = (*node)[path[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw UsageError("--set " + key + ": '" + path[i] + "' is not an object");
    node = &child;
  }
  (*node)[path.back()] = std::move(value);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::uint8_t parse_length_fields(const json& names) {
  std::uint8_t fields = 0;
  for (const auto& n : names) {
    const auto name = n.get<std::string>();
    if (name == "ground_truth") fields |= kGroundTruthField;
    else if (name == "model_correct") fields |= kModelCorrectField;
    else if (name == "hallucinations") fields |= kHallucinationFields;
    else throw ConfigError("unknown length field '" + name + "'");
  }
  return fields;
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base) {
  RunConfig c;
  if (j.contains("corpus")) c.corpus = resolve(base, j.at("corpus").get<std::string>());
  if (j.contains("out")) c.out_dir = resolve(base, j.at("out").get<std::string>());

  if (const auto* p = j.contains("preprocess") ? &j.at("preprocess") : nullptr) {
    c.preprocess.l_min = p->value("l_min", c.preprocess.l_min);
    c.preprocess.l_max = p->value("l_max", c.preprocess.l_max);
    c.preprocess.lowercase = p->value("lowercase", c.preprocess.lowercase);
    c.preprocess.strip_html = p->value("strip_html", c.preprocess.strip_html);
    if (p->contains("length_fields")) c.length_fields = parse_length_fields(p->at("length_fields"));
  }

  if (const auto* g = j.contains("generator") ? &j.at("generator") : nullptr) {
    c.generator.endpoint = g->value("endpoint", c.generator.endpoint);
    c.generator.model = g->value("model", c.generator.model);
    if (g->contains("temperature") && !g->at("temperature").is_null()) {
      c.generator.temperature = g->at("temperature").get<double>();
    }
    c.generator.max_retries = g->value("max_retries", c.generator.max_retries);
    c.generator.timeout_seconds = g->value("timeout", c.generator.timeout_seconds);
    c.generator.parallelism = g->value("parallelism", c.generator.parallelism);
    if (g->contains("replay") && !g->at("replay").is_null()) {
      c.generator.replay_path = resolve(base, g->at("replay").get<std::string>());
    }
    if (g->contains("prompts_dir") && !g->at("prompts_dir").is_null()) {
      c.prompts_dir = resolve(base, g->at("prompts_dir").get<std::string>());
    }
    if (g->contains("kinds")) {
      c.generate_kinds.clear();
      for (const auto& k : g->at("kinds")) c.generate_kinds.push_back(parse_group_label(k.get<std::string>()));
    }
  }

  if (const auto* e = j.contains("embedder") ? &j.at("embedder") : nullptr) {
    c.embedder.endpoint = e->value("endpoint", c.embedder.endpoint);
    c.embedder.model = e->value("model", c.embedder.model);
    c.embedder.batch_size = e->value("batch_size", c.embedder.batch_size);
    c.embedder.parallelism = e->value("parallelism", c.embedder.parallelism);
    c.embedder.normalize = e->value("normalize", c.embedder.normalize);
    c.embedder.fixture_dim = e->value("fixture_dim", c.embedder.fixture_dim);
    c.embedder.fixture_seed = e->value("fixture_seed", c.embedder.fixture_seed);
    c.embedder.timeout_seconds = e->value("timeout", c.embedder.timeout_seconds);
    if (e->contains("backend")) c.embedder.backend = parse_backend(e->at("backend").get<std::string>());
    if (e->contains("cache_dir") && !e->at("cache_dir").is_null()) {
      c.embedder.cache_dir = resolve(base, e->at("cache_dir").get<std::string>());
    }
  }

  if (j.contains("umap")) detail::update_umap_config(c.umap, j.at("umap"));
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.sweep_parallelism = j.value("sweep_parallelism", c.sweep_parallelism);

  if (const auto* k = j.contains("classify") ? &j.at("classify") : nullptr) {
    if (k->contains("space")) c.classify_space = parse_space(k->at("space").get<std::string>());
    if (k->contains("input") && !k->at("input").is_null()) {
      c.classify_input = resolve(base, k->at("input").get<std::string>());
    }
  }
  if (const auto* p = j.contains("plot") ? &j.at("plot") : nullptr) {
    c.plot.width = p->value("width", c.plot.width);
    c.plot.height = p->value("height", c.plot.height);
    c.plot.point_radius = p->value("point_radius", c.plot.point_radius);
    c.plot.centroid_radius = p->value("centroid_radius", c.plot.centroid_radius);
    c.plot.centroid_color = p->value("centroid_color", c.plot.centroid_color);
    if (p->contains("axes")) {
      const auto axes = p->at("axes").get<std::vector<int>>();
      if (axes.size() != 2) throw ConfigError("plot.axes must list two layout columns");
      c.plot.x_axis = axes[0];
      c.plot.y_axis = axes[1];
    }
    if (p->contains("colors")) c.plot.colors = p->at("colors").get<std::map<std::string, std::string>>();
  }
  return c;
}

}  // namespace

void RunConfig::validate() const {
  preprocess.validate();
  generator.validate();
  embedder.validate();
  umap.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (sweep_parallelism < 1) throw ConfigError("sweep_parallelism must be at least 1");
  if (generate_kinds.empty()) throw ConfigError("generator.kinds must not be empty");
  for (const auto& k : generate_kinds) {
    if (k.kind() == GroupLabel::Kind::kGroundTruth) throw ConfigError("ground_truth cannot be a generated kind");
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides) {
  json root = json::object();
  std::filesystem::path base = std::filesystem::current_path();
  if (file) {
    root = detail::read_json_file(*file);
    if (!root.is_object()) throw ConfigError(file->string() + ": config must be a JSON object");
    base = std::filesystem::absolute(*file).parent_path();
  }
  if (const char* env = std::getenv(kGeneratorEndpointEnv); env != nullptr && *env != '\0') {
    root["generator"]["endpoint"] = env;
  }
  if (const char* env = std::getenv(kEmbedderEndpointEnv); env != nullptr && *env != '\0') {
    root["embedder"]["endpoint"] = env;
  }
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig config;
  try {
    config = config_from_json(root, base);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return config;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, ',')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("invalid seed list '" + text + "'");
    }
    try {
      seeds.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw UsageError("invalid seed list '" + text + "'");
    }
  }
  if (seeds.empty()) throw UsageError("seed list is empty");
  return seeds;
}

}  // namespace hallucmap
