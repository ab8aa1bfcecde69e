#include "hallucmap/cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "hallucmap/classifier.hpp"
#include "hallucmap/embedder.hpp"
#include "hallucmap/generator.hpp"
#include "hallucmap/geometry.hpp"
#include "hallucmap/manifold.hpp"
#include "hallucmap/report.hpp"
#include "json_io.hpp"

namespace hallucmap {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

fs::path artifact(const RunConfig& config, const char* name) { return config.out_dir / name; }

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.out_dir.string() + ": " + ec.message());
}

void require_file(const fs::path& path, const char* producer) {
  if (!fs::exists(path)) {
    throw IoError(path.string() + " does not exist; run '" + std::string(producer) + "' first");
  }
}

struct Query {
  std::string id;
  std::string text;
};

std::vector<Query> load_queries(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Query> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      queries.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  if (queries.empty()) throw ValidationError(path.string() + " holds no queries");
  return queries;
}

std::string table_to_json(const CentroidTable& table, const LabeledLayout& layout) {
  ordered_json clusters = ordered_json::array();
  for (const auto& c : table.clusters) {
    ordered_json centroid = ordered_json::array();
    for (Eigen::Index i = 0; i < c.centroid.size(); ++i) centroid.push_back(c.centroid(i));
    clusters.push_back(
        {{"label", c.label.name()}, {"count", c.count}, {"centroid", std::move(centroid)}, {"mean_radius", c.mean_radius}});
  }
  ordered_json pairs = ordered_json::array();
  for (const auto& p : table.pairs) pairs.push_back({{"a", p.a.name()}, {"b", p.b.name()}, {"d", p.distance}});
  const auto& coords = layout.layout.coords;
  ordered_json j = {{"seed", layout.layout.seed},
                    {"shape", {coords.rows(), coords.cols()}},
                    {"clusters", std::move(clusters)},
                    {"pairs", std::move(pairs)}};
  return j.dump(1) + "\n";
}

void check_matching_rows(const EmbeddingMatrix& embeddings, const LabeledLayout& layout) {
  if (embeddings.ids != layout.ids) {
    throw ConsistencyError("layout rows do not match the embedding matrix; rerun 'project'");
  }
}

}  // namespace

void run_prepare(const RunConfig& config, std::ostream& log) {
  if (config.corpus.empty()) throw ConfigError("no corpus path configured");
  ensure_out_dir(config);
  const auto raw = load_corpus(config.corpus);
  std::vector<QARecord> cleaned;
  cleaned.reserve(raw.size());
  for (const auto& r : raw) cleaned.push_back(clean_record(r, config.preprocess));
  const auto unique = dedup(cleaned, config.preprocess);
  const auto kept = filter_by_length(unique, config.preprocess, config.length_fields);
  save_corpus(kept, artifact(config, artifacts::kPreparedCorpus));
  log << "prepare: " << raw.size() << " records read, " << unique.size() << " after dedup, " << kept.size()
      << " within [" << config.preprocess.l_min << ", " << config.preprocess.l_max << "] words\n";
}

void run_generate(const RunConfig& config, std::ostream& log) {
  const auto input = artifact(config, artifacts::kPreparedCorpus);
  require_file(input, "prepare");
  const auto records = load_corpus(input);
  auto prompts = config.prompts_dir ? PromptLibrary::with_overrides(*config.prompts_dir) : PromptLibrary::defaults();
  AnswerGenerator generator(config.generator, config.preprocess, std::move(prompts), CompletionFn{});
  std::size_t out_of_window = 0;
  const auto augmented = generator.augment(records, config.generate_kinds, &out_of_window);
  const auto kept = filter_by_length(augmented, config.preprocess, config.length_fields);
  save_corpus(kept, artifact(config, artifacts::kGeneratedCorpus));
  log << "generate: " << out_of_window << " answers outside the length window, " << kept.size() << " of "
      << augmented.size() << " records kept\n";
}

void run_embed(const RunConfig& config, std::ostream& log) {
  const auto input = artifact(config, artifacts::kGeneratedCorpus);
  require_file(input, "generate");
  const auto records = load_corpus(input);
  Embedder embedder(config.embedder);
  const auto matrix = embed_corpus(records, embedder);
  save_embedding_matrix(matrix, artifact(config, artifacts::kEmbeddings));
  const auto stats = embedder.stats();
  log << "embed: " << matrix.rows.rows() << " x " << matrix.rows.cols() << ", cache hits " << stats.cache_hits
      << ", misses " << stats.cache_misses << "\n";
}

void run_project(const RunConfig& config, std::ostream& log) {
  const auto input = artifact(config, artifacts::kEmbeddings);
  require_file(input, "embed");
  const auto matrix = load_embedding_matrix(input);
  const auto keys = matrix.point_keys();
  LabeledLayout layout{umap_fit(matrix.rows, config.umap, keys), matrix.ids, matrix.labels};
  write_layout_json(layout, artifact(config, artifacts::kLayout));
  log << "project: " << layout.layout.coords.rows() << " points to " << layout.layout.coords.cols()
      << " components, seed " << layout.layout.seed << "\n";
}

void run_analyze(const RunConfig& config, std::ostream& log) {
  const auto input = artifact(config, artifacts::kLayout);
  require_file(input, "project");
  const auto layout = read_layout_json(input);
  const auto table = centroid_distance_table(layout.layout.coords, layout.labels);
  const auto& coords = layout.layout.coords;
  detail::write_text_file(artifact(config, artifacts::kDistancesText),
                          render_distance_table(table.pairs, {std::to_string(layout.layout.seed), coords.rows(),
                                                              coords.cols()}));
  detail::write_text_file(artifact(config, artifacts::kDistancesJson), table_to_json(table, layout));
  log << "analyze: " << table.clusters.size() << " clusters, " << table.pairs.size() << " centroid pairs\n";
}

void run_sweep(const RunConfig& config, std::ostream& log) {
  const auto input = artifact(config, artifacts::kEmbeddings);
  require_file(input, "embed");
  const auto matrix = load_embedding_matrix(input);
  const auto keys = matrix.point_keys();
  const auto report = seed_sweep(matrix.rows, matrix.labels, config.umap, config.seeds, keys, config.sweep_parallelism);
  detail::write_text_file(artifact(config, artifacts::kSweepText),
                          render_sweep_tables(report, matrix.rows.rows(), config.umap.n_components));
  write_report_json(report, artifact(config, artifacts::kSweepJson));
  log << "sweep: " << report.seeds.size() << " seeds\n";
}

void run_classify(const RunConfig& config, const fs::path& input, const std::optional<fs::path>& model_path,
                  std::ostream& log) {
  ensure_out_dir(config);
  CentroidModel model;
  if (model_path) {
    model = load_model(*model_path);
  } else {
    const auto emb_path = artifact(config, artifacts::kEmbeddings);
    require_file(emb_path, "embed");
    const auto embeddings = load_embedding_matrix(emb_path);
    if (config.classify_space == Space::kEmbedding) {
      model = fit_centroids(embeddings.rows, embeddings.labels, Space::kEmbedding);
    } else {
      const auto layout_path = artifact(config, artifacts::kLayout);
      require_file(layout_path, "project");
      const auto layout = read_layout_json(layout_path);
      check_matching_rows(embeddings, layout);
      model = fit_layout_model(embeddings.rows, layout.layout.coords, embeddings.labels, config.umap);
    }
    save_model(model, artifact(config, artifacts::kModel));
  }

  const auto queries = load_queries(input);
  std::vector<std::string> texts;
  texts.reserve(queries.size());
  for (const auto& q : queries) texts.push_back(q.text);
  Embedder embedder(config.embedder);
  const auto vectors = embedder.embed_texts(texts);
  const auto expected_dim = model.space == Space::kEmbedding ? model.dim() : model.train_embeddings.cols();
  if (vectors.cols() != expected_dim) {
    throw ConsistencyError("query embeddings have dimension " + std::to_string(vectors.cols()) + ", model expects " +
                           std::to_string(expected_dim));
  }

  std::string lines;
  std::size_t hallucinated = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Eigen::VectorXd v = vectors.row(static_cast<Eigen::Index>(i)).transpose();
    const auto p = model.space == Space::kEmbedding ? predict(v, model) : predict_from_embedding(v, model);
    const auto verdict = binary_decision(p);
    if (verdict == Verdict::kHallucinated) ++hallucinated;
    ordered_json distances = ordered_json::object();
    for (const auto& [label, d] : p.distances) distances[label.name()] = d;
    ordered_json row = {{"id", queries[i].id},
                        {"label", p.label.name()},
                        {"verdict", to_string(verdict)},
                        {"margin", p.margin},
                        {"distances", std::move(distances)}};
    lines += row.dump() + "\n";
  }
  detail::write_text_file(artifact(config, artifacts::kPredictions), lines);
  log << "classify: " << queries.size() << " queries in " << to_string(model.space) << " space, " << hallucinated
      << " flagged hallucinated\n";
}

void run_plot(const RunConfig& config, std::ostream& log) {
  const auto input = artifact(config, artifacts::kLayout);
  require_file(input, "project");
  const auto layout = read_layout_json(input);
  const auto table = centroid_distance_table(layout.layout.coords, layout.labels);
  detail::write_text_file(artifact(config, artifacts::kPlot),
                          render_scatter_svg(layout.layout.coords, layout.labels, table.clusters, config.plot));
  log << "plot: " << artifact(config, artifacts::kPlot).string() << "\n";
}

void run_pipeline(const RunConfig& config, std::ostream& log) {
  run_prepare(config, log);
  run_generate(config, log);
  run_embed(config, log);
  run_project(config, log);
  run_analyze(config, log);
  run_sweep(config, log);
  if (config.classify_input) run_classify(config, *config.classify_input, std::nullopt, log);
  run_plot(config, log);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hallucination mapping: embed answers, project them, compare label centroids."};
  app.name("hallucmap");
  app.require_subcommand(1, 1);

  std::optional<std::string> config_path;
  std::optional<std::string> seeds;
  std::optional<int> n_components;
  std::optional<std::string> backend;
  std::optional<std::string> out_dir;
  std::vector<std::string> sets;
  std::optional<std::string> input;
  std::optional<std::string> model_path;
  std::optional<std::string> space;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seeds", seeds, "Comma-separated projection seeds, e.g. 50,100,150,200");
  app.add_option("--n-components", n_components, "Layout dimension")->check(CLI::IsMember({2, 3}));
  app.add_option("--backend", backend, "Embedding backend")->check(CLI::IsMember({"remote", "fixture"}));
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", sets, "Config override KEY=VALUE (dotted keys, repeatable)");

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"prepare", "Clean, deduplicate and length-filter the corpus"},
      {"generate", "Add generated answers to the prepared corpus"},
      {"embed", "Embed every answer"},
      {"project", "Project embeddings to the layout space"},
      {"analyze", "Centroid distance table of the layout"},
      {"sweep", "Centroid distances over several projection seeds"},
      {"classify", "Nearest-centroid labels for new texts"},
      {"plot", "SVG scatter plot of the layout"},
      {"pipeline", "Run every stage in order"},
  };
  for (const auto& [name, description] : stages) {
    auto* sub = app.add_subcommand(name, description);
    sub->fallthrough();
    if (name == "classify" || name == "pipeline") {
      sub->add_option("--input", input, "JSONL of {\"id\", \"text\"} to classify");
      sub->add_option("--space", space, "Classifier space")->check(CLI::IsMember({"embedding", "layout"}));
    }
    if (name == "classify") sub->add_option("--model", model_path, "Saved centroid model to use instead of fitting");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return static_cast<int>(ExitCode::kUsage);
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    auto config = load_run_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt, sets);
    if (seeds) config.seeds = parse_seed_list(*seeds);
    if (n_components) config.umap.n_components = *n_components;
    if (backend) config.embedder.backend = parse_backend(*backend);
    if (out_dir) config.out_dir = *out_dir;
    if (space) config.classify_space = parse_space(*space);
    if (input) config.classify_input = fs::path(*input);
    config.validate();

    if (command == "prepare") run_prepare(config, out);
    else if (command == "generate") run_generate(config, out);
    else if (command == "embed") run_embed(config, out);
    else if (command == "project") run_project(config, out);
    else if (command == "analyze") run_analyze(config, out);
    else if (command == "sweep") run_sweep(config, out);
    else if (command == "plot") run_plot(config, out);
    else if (command == "pipeline") run_pipeline(config, out);
    else if (command == "classify") {
      if (!config.classify_input) throw UsageError("classify needs --input");
      run_classify(config, *config.classify_input,
                   model_path ? std::optional<fs::path>(*model_path) : std::nullopt, out);
    }
  } catch (const Error& e) {
    err << "hallucmap " << command << ": " << e.what() << "\n";
    if (e.code() == ExitCode::kUsage) err << "\n" << app.help();
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "hallucmap " << command << ": " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
  return static_cast<int>(ExitCode::kOk);
}

}  // namespace hallucmap
