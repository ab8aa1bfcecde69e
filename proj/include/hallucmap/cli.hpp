#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "hallucmap/config.hpp"

namespace hallucmap {

/// Artifact file names inside the output directory.
namespace artifacts {
inline constexpr const char* kPreparedCorpus = "corpus.prepared.jsonl";
inline constexpr const char* kGeneratedCorpus = "corpus.generated.jsonl";
inline constexpr const char* kEmbeddings = "embeddings.json";
inline constexpr const char* kLayout = "layout.json";
inline constexpr const char* kDistancesText = "distances.txt";
inline constexpr const char* kDistancesJson = "distances.json";
inline constexpr const char* kSweepText = "sweep.txt";
inline constexpr const char* kSweepJson = "sweep.json";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kPlot = "layout.svg";
}  // namespace artifacts

// Each stage reads the previous stage's artifact from config.out_dir and writes
// its own there. `log` receives one short progress line per stage.
void run_prepare(const RunConfig& config, std::ostream& log);
void run_generate(const RunConfig& config, std::ostream& log);
void run_embed(const RunConfig& config, std::ostream& log);
void run_project(const RunConfig& config, std::ostream& log);
void run_analyze(const RunConfig& config, std::ostream& log);
void run_sweep(const RunConfig& config, std::ostream& log);
/// Fits (or loads, when `model_path` is set) a centroid model and writes one
/// prediction per line of `input`.
void run_classify(const RunConfig& config, const std::filesystem::path& input,
                  const std::optional<std::filesystem::path>& model_path, std::ostream& log);
void run_plot(const RunConfig& config, std::ostream& log);
void run_pipeline(const RunConfig& config, std::ostream& log);

/// Parses `args` (without the program name), runs the subcommand and returns
/// the process exit code. Errors are reported on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hallucmap
