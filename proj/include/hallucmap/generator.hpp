#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hallucmap/corpus.hpp"
#include "hallucmap/labels.hpp"

namespace hallucmap {

struct GenProviderConfig {
  std::string endpoint = "http://localhost:11434";
  std::string model = "llama3.1";
  /// Sent as options.temperature when set; otherwise the provider default.
  std::optional<double> temperature;
  int max_retries = 3;
  double timeout_seconds = 120.0;
  /// Line-delimited {"id", "kind", "text"} answers served before any request.
  std::optional<std::filesystem::path> replay_path;
  int parallelism = 4;

  void validate() const;
};

/// Prompt templates, one per generated kind, with {question}, {l_min} and
/// {l_max} placeholders.
class PromptLibrary {
 public:
  /// Templates shipped in assets/prompts.
  static PromptLibrary defaults();
  /// Defaults overridden by any "<kind>.txt" file in `dir`.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  /// Throws ValidationError if the template lacks a length placeholder.
  void set(const GroupLabel& kind, std::string text);
  const std::string& get(const GroupLabel& kind) const;

  std::string build(const std::string& question, const GroupLabel& kind, const PreprocessConfig& config) const;

 private:
  std::map<std::string, std::string> templates_;
};

/// Prompt from the default templates. Throws UsageError for GroundTruth.
std::string build_prompt(const std::string& question, const GroupLabel& kind, const PreprocessConfig& config);

/// Read-only map from (record id, kind name) to a stored answer.
class ReplayStore {
 public:
  static ReplayStore load(const std::filesystem::path& path);

  void add(const std::string& id, const GroupLabel& kind, std::string text);
  std::optional<std::string> find(const std::string& id, const GroupLabel& kind) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, std::string> entries_;
};

struct GeneratedAnswer {
  std::string text;
  bool in_window = true;
  int attempts = 0;
  bool replayed = false;
};

/// prompt -> completion text. Throws ProviderError on transport failure.
using CompletionFn = std::function<std::string(const std::string& prompt)>;

/// Completion function posting to {endpoint}/api/generate.
CompletionFn http_completion(const GenProviderConfig& provider);

class AnswerGenerator {
 public:
  AnswerGenerator(GenProviderConfig provider, PreprocessConfig preprocess, PromptLibrary prompts = PromptLibrary::defaults(),
                  CompletionFn completion = {});

  /// Replay entry if present, otherwise the provider with up to max_retries
  /// extra attempts while the reply falls outside the length window. Returns
  /// the last reply flagged out of window once retries run out.
  GeneratedAnswer generate(const QARecord& record, const GroupLabel& kind) const;

  /// Fills in the requested kinds that each record is missing, with bounded
  /// parallelism. Output order matches input order.
  std::vector<QARecord> augment(std::span<const QARecord> records, std::span<const GroupLabel> kinds,
                                std::size_t* out_of_window = nullptr) const;

 private:
  GenProviderConfig provider_;
  PreprocessConfig preprocess_;
  PromptLibrary prompts_;
  CompletionFn completion_;
  std::optional<ReplayStore> replay_;
};

GeneratedAnswer generate_answer(const QARecord& record, const GroupLabel& kind, const GenProviderConfig& provider,
                                const PreprocessConfig& preprocess = {});

}  // namespace hallucmap
