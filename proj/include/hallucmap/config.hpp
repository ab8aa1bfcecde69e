#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hallucmap/classifier.hpp"
#include "hallucmap/corpus.hpp"
#include "hallucmap/embedder.hpp"
#include "hallucmap/generator.hpp"
#include "hallucmap/manifold.hpp"
#include "hallucmap/report.hpp"

namespace hallucmap {

/// Environment variables that override provider endpoints from the config file.
inline constexpr const char* kGeneratorEndpointEnv = "HALLUCMAP_GENERATOR_ENDPOINT";
inline constexpr const char* kEmbedderEndpointEnv = "HALLUCMAP_EMBEDDER_ENDPOINT";

/// Everything one pipeline run needs.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path out_dir = "out";
  PreprocessConfig preprocess;
  std::uint8_t length_fields = kAllAnswerFields;
  GenProviderConfig generator;
  std::vector<GroupLabel> generate_kinds = {GroupLabel::model_correct(),
                                            GroupLabel::hallucinated(HallucinationType::kFabrication)};
  std::optional<std::filesystem::path> prompts_dir;
  EmbedderConfig embedder;
  UmapConfig umap;
  std::vector<std::uint64_t> seeds = {50, 100, 150, 200};
  int sweep_parallelism = 4;
  Space classify_space = Space::kEmbedding;
  /// JSONL of {"id", "text"} lines to classify; classify is skipped by
  /// `pipeline` when unset.
  std::optional<std::filesystem::path> classify_input;
  PlotStyle plot;

  void validate() const;
};

/// Builds a RunConfig from an optional JSON file, the endpoint environment
/// variables, then `key=value` overrides (dotted keys, JSON or bare-string
/// values), in that order of increasing precedence. Relative paths resolve
/// against the config file's directory, or the working directory without one.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, std::span<const std::string> overrides);

/// "50,100,150" -> {50, 100, 150}. Throws UsageError on malformed input.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace hallucmap
