#include "hallucmap/embedder.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <thread>

#include "hallucmap/error.hpp"
#include "hallucmap/hash.hpp"
#include "hallucmap/rng.hpp"
#include "http.hpp"
#include "json_io.hpp"

namespace hallucmap {

namespace {

using detail::json;

Eigen::VectorXd vector_from_json(const json& values, const std::string& what) {
  if (!values.is_array() || values.empty()) throw ProviderError(what + ": expected a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number()) throw ProviderError(what + ": embedding entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = values[i].get<double>();
  }
  if (!v.allFinite()) throw ProviderError(what + ": embedding contains non-finite values");
  return v;
}

}  // namespace

std::string to_string(EmbedBackend backend) { return backend == EmbedBackend::kFixture ? "fixture" : "remote"; }

EmbedBackend parse_backend(const std::string& name) {
  if (name == "remote") return EmbedBackend::kRemote;
  if (name == "fixture") return EmbedBackend::kFixture;
  throw ConfigError("unknown embedding backend '" + name + "' (expected remote or fixture)");
}

void EmbedderConfig::validate() const {
  if (batch_size < 1) throw ConfigError("embedder batch_size must be at least 1");
  if (parallelism < 1) throw ConfigError("embedder parallelism must be at least 1");
  if (model.empty()) throw ConfigError("embedder model identifier is empty");
  if (backend == EmbedBackend::kFixture && fixture_dim < 1) throw ConfigError("fixture_dim must be at least 1");
  if (backend == EmbedBackend::kRemote && endpoint.empty()) throw ConfigError("embedder endpoint is empty");
}

Eigen::VectorXd l2_normalize(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateInputError("cannot normalize a zero or non-finite vector");
  return v / norm;
}

Eigen::VectorXd fixture_embed(std::string_view text, int dim, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("fixture dimension must be at least 1");
  CounterRng rng(combine_keys(seed, stable_hash64(clean_text(text))));
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return l2_normalize(v);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::string EmbeddingCache::file_name(std::string_view model, std::string_view cleaned_text) {
  return sha256_hex(std::string(model) + "\n" + sha256_hex(cleaned_text)) + ".json";
}

std::optional<Eigen::VectorXd> EmbeddingCache::load(std::string_view model, std::string_view cleaned_text) const {
  const auto path = dir_ / file_name(model, cleaned_text);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  json entry;
  try {
    entry = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("corrupt cache entry " + path.string() + ": " + e.what());
  }
  if (entry.value("model", "") != model || entry.value("text_sha256", "") != sha256_hex(cleaned_text)) {
    return std::nullopt;
  }
  try {
    return vector_from_json(entry.at("embedding"), path.string());
  } catch (const ProviderError& e) {
    throw ParseError(std::string("corrupt cache entry: ") + e.what());
  }
}

void EmbeddingCache::store(std::string_view model, std::string_view cleaned_text, const Eigen::VectorXd& vector) {
  json entry = {{"model", model}, {"text_sha256", sha256_hex(cleaned_text)}, {"embedding", json::array()}};
  for (Eigen::Index i = 0; i < vector.size(); ++i) entry["embedding"].push_back(vector(i));
  const auto name = file_name(model, cleaned_text);
  std::lock_guard lock(write_mutex_);
  const auto tmp = dir_ / (name + ".tmp");
  detail::write_text_file(tmp, entry.dump() + "\n");
  std::error_code ec;
  std::filesystem::rename(tmp, dir_ / name, ec);
  if (ec) throw IoError("cannot commit cache entry " + name + ": " + ec.message());
}

Embedder::Embedder(EmbedderConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
}

EmbedStats Embedder::stats() const { return {hits_.load(), misses_.load(), requests_.load()}; }

Eigen::VectorXd Embedder::compute(const std::string& cleaned_text) {
  if (config_.backend == EmbedBackend::kFixture) {
    return fixture_embed(cleaned_text, config_.fixture_dim, config_.fixture_seed);
  }
  ++requests_;
  const auto reply = detail::post_json(config_.endpoint, "/api/embeddings",
                                       {{"model", config_.model}, {"prompt", cleaned_text}}, config_.timeout_seconds);
  if (!reply.is_object() || !reply.contains("embedding")) {
    throw ProviderError(config_.endpoint + "/api/embeddings: reply has no \"embedding\" field");
  }
  return vector_from_json(reply.at("embedding"), config_.endpoint + "/api/embeddings");
}

Eigen::MatrixXd Embedder::embed_texts(std::span<const std::string> texts) {
  std::vector<std::string> cleaned(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    cleaned[i] = clean_text(texts[i]);
    if (cleaned[i].empty()) throw ValidationError("text " + std::to_string(i) + " is empty");
  }

  std::vector<Eigen::VectorXd> vectors(texts.size());
  const std::size_t batch = static_cast<std::size_t>(config_.batch_size);
  const std::size_t n_batches = (texts.size() + batch - 1) / batch;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches && !failed; b = next++) {
      try {
        for (std::size_t i = b * batch; i < std::min(texts.size(), (b + 1) * batch); ++i) {
          std::optional<Eigen::VectorXd> v;
          if (cache_) v = cache_->load(config_.model, cleaned[i]);
          if (v) {
            ++hits_;
          } else {
            ++misses_;
            v = compute(cleaned[i]);
            if (cache_) cache_->store(config_.model, cleaned[i], *v);
          }
          vectors[i] = std::move(*v);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        failed = true;
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config_.parallelism), n_batches);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  if (texts.empty()) return {};
  const Eigen::Index dim = vectors.front().size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != dim) {
      throw ConsistencyError("embedding dimension changed within a run: " + std::to_string(dim) + " then " +
                             std::to_string(vectors[i].size()) + " (text " + std::to_string(i) + ")");
    }
    out.row(static_cast<Eigen::Index>(i)) = config_.normalize ? l2_normalize(vectors[i]) : vectors[i];
  }
  dim_ = dim;
  return out;
}

Eigen::MatrixXd embed_texts(std::span<const std::string> texts, const EmbedderConfig& config) {
  Embedder embedder(config);
  return embedder.embed_texts(texts);
}

void EmbeddingMatrix::validate() const {
  if (rows.rows() == 0) throw ValidationError("embedding matrix is empty");
  if (static_cast<Eigen::Index>(labels.size()) != rows.rows() || static_cast<Eigen::Index>(ids.size()) != rows.rows()) {
    throw ValidationError("embedding rows, labels and ids differ in length");
  }
}

std::vector<std::uint64_t> EmbeddingMatrix::point_keys() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(ids.size());
  for (const auto& id : ids) keys.push_back(stable_hash64(id));
  return keys;
}

AnswerTexts collect_answers(std::span<const QARecord> records) {
  AnswerTexts out;
  auto add = [&](const QARecord& r, const GroupLabel& label, const std::string& text, std::map<std::string, int>& seen) {
    std::string id = r.id + "/" + label.name();
    if (int n = ++seen[id]; n > 1) id += "#" + std::to_string(n);
    out.texts.push_back(text);
    out.labels.push_back(label);
    out.ids.push_back(std::move(id));
  };
  for (const auto& r : records) {
    std::map<std::string, int> seen;
    add(r, GroupLabel::ground_truth(), r.ground_truth, seen);
    if (r.model_correct) add(r, GroupLabel::model_correct(), *r.model_correct, seen);
    for (const auto& h : r.hallucinations) add(r, GroupLabel::hallucinated(h.type), h.text, seen);
  }
  return out;
}

EmbeddingMatrix embed_corpus(std::span<const QARecord> records, Embedder& embedder) {
  auto answers = collect_answers(records);
  EmbeddingMatrix matrix{embedder.embed_texts(answers.texts), std::move(answers.labels), std::move(answers.ids),
                         embedder.config().model};
  matrix.validate();
  return matrix;
}

void save_embedding_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  matrix.validate();
  json labels = json::array();
  for (const auto& l : matrix.labels) labels.push_back(l.name());
  detail::write_text_file(path, json{{"model", matrix.model},
                                     {"dim", matrix.rows.cols()},
                                     {"ids", matrix.ids},
                                     {"labels", labels},
                                     {"rows", detail::matrix_to_json(matrix.rows)}}
                                        .dump() +
                                    "\n");
}

EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path) {
  const auto j = detail::read_json_file(path);
  EmbeddingMatrix matrix;
  try {
    matrix.model = j.at("model").get<std::string>();
    matrix.ids = j.at("ids").get<std::vector<std::string>>();
    for (const auto& l : j.at("labels")) matrix.labels.push_back(parse_group_label(l.get<std::string>()));
    matrix.rows = detail::matrix_from_json(j.at("rows"), "rows");
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  matrix.validate();
  return matrix;
}

}  // namespace hallucmap
