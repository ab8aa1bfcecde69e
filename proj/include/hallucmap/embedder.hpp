#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hallucmap/corpus.hpp"
#include "hallucmap/labels.hpp"

namespace hallucmap {

enum class EmbedBackend { kRemote, kFixture };

std::string to_string(EmbedBackend backend);
EmbedBackend parse_backend(const std::string& name);

inline constexpr const char* kDefaultEmbeddingModel = "all-MiniLM-L6-v2";

struct EmbedderConfig {
  std::string endpoint = "http://localhost:11434";
  std::string model = kDefaultEmbeddingModel;
  int batch_size = 32;
  int parallelism = 4;
  std::optional<std::filesystem::path> cache_dir;
  bool normalize = true;
  EmbedBackend backend = EmbedBackend::kRemote;
  int fixture_dim = 384;
  std::uint64_t fixture_seed = 0;
  double timeout_seconds = 60.0;

  void validate() const;
};

/// Unit-norm copy of v. Throws DegenerateInputError for a zero vector.
Eigen::VectorXd l2_normalize(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Deterministic pseudo-embedding of the cleaned text: `dim` standard normal
/// draws from a counter-based stream keyed by (seed, text), L2-normalized.
Eigen::VectorXd fixture_embed(std::string_view text, int dim, std::uint64_t seed);

/// One file per (model, text) under a directory. Reads may run concurrently;
/// writes are serialized and atomic (write then rename).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path dir);

  /// File name (hex digest of the key) for a model and cleaned text.
  static std::string file_name(std::string_view model, std::string_view cleaned_text);

  std::optional<Eigen::VectorXd> load(std::string_view model, std::string_view cleaned_text) const;
  void store(std::string_view model, std::string_view cleaned_text, const Eigen::VectorXd& vector);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

struct EmbedStats {
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t requests = 0;  // remote calls
};

/// Embeds texts through the configured backend, consulting the cache first.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig config);

  /// One row per text in input order. Texts must be non-empty. All rows share
  /// the dimension of the first vector produced in this run.
  Eigen::MatrixXd embed_texts(std::span<const std::string> texts);

  EmbedStats stats() const;
  const EmbedderConfig& config() const { return config_; }
  /// Dimension adopted by the most recent run, 0 before any.
  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::VectorXd compute(const std::string& cleaned_text);

  EmbedderConfig config_;
  std::optional<EmbeddingCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> requests_{0};
  Eigen::Index dim_ = 0;
};

Eigen::MatrixXd embed_texts(std::span<const std::string> texts, const EmbedderConfig& config);

/// Labeled rows ready for projection. ids are "<record id>/<label name>".
struct EmbeddingMatrix {
  Eigen::MatrixXd rows;
  std::vector<GroupLabel> labels;
  std::vector<std::string> ids;
  std::string model;

  /// Throws ValidationError unless rows, labels and ids agree in length and
  /// there is at least one row.
  void validate() const;
  /// stable_hash64 of each id, used to key per-point random streams.
  std::vector<std::uint64_t> point_keys() const;
};

/// The texts of every answer in the corpus in a fixed order: per record,
/// ground truth, model answer (if any), then hallucinations in stored order.
struct AnswerTexts {
  std::vector<std::string> texts;
  std::vector<GroupLabel> labels;
  std::vector<std::string> ids;
};
AnswerTexts collect_answers(std::span<const QARecord> records);

EmbeddingMatrix embed_corpus(std::span<const QARecord> records, Embedder& embedder);

void save_embedding_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_embedding_matrix(const std::filesystem::path& path);

}  // namespace hallucmap
