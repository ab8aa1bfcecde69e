#include "hallucmap/generator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <hallucmap/default_prompts.hpp>

#include "hallucmap/error.hpp"
#include "http.hpp"

namespace hallucmap {

namespace {

using nlohmann::json;

void replace_all(std::string& text, std::string_view from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

void require_generated_kind(const GroupLabel& kind) {
  if (kind.kind() == GroupLabel::Kind::kGroundTruth) {
    throw UsageError("ground truth answers come from the dataset and cannot be generated");
  }
}

}  // namespace

void GenProviderConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("generator endpoint is empty");
  if (max_retries < 0) throw ConfigError("generator max_retries must be non-negative");
  if (temperature && *temperature < 0.0) throw ConfigError("generator temperature must be non-negative");
  if (parallelism < 1) throw ConfigError("generator parallelism must be at least 1");
  if (!(timeout_seconds > 0.0)) throw ConfigError("generator timeout must be positive");
}

PromptLibrary PromptLibrary::defaults() {
  PromptLibrary lib;
  for (const auto& [kind, text] : detail::kDefaultPrompts) lib.set(parse_group_label(kind), std::string(text));
  return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  auto lib = defaults();
  for (const auto& [kind, text] : detail::kDefaultPrompts) {
    const auto path = dir / (std::string(kind) + ".txt");
    std::ifstream in(path);
    if (!in) continue;
    std::stringstream buffer;
    buffer << in.rdbuf();
    lib.set(parse_group_label(kind), buffer.str());
  }
  return lib;
}

void PromptLibrary::set(const GroupLabel& kind, std::string text) {
  require_generated_kind(kind);
  if (text.find("{l_min}") == std::string::npos || text.find("{l_max}") == std::string::npos) {
    throw ValidationError("prompt template for " + kind.name() + " must mention {l_min} and {l_max}");
  }
  templates_[kind.name()] = std::move(text);
}

const std::string& PromptLibrary::get(const GroupLabel& kind) const {
  require_generated_kind(kind);
  auto it = templates_.find(kind.name());
  if (it == templates_.end()) throw UsageError("no prompt template for " + kind.name());
  return it->second;
}

std::string PromptLibrary::build(const std::string& question, const GroupLabel& kind,
                                 const PreprocessConfig& config) const {
  std::string prompt = get(kind);
  replace_all(prompt, "{l_min}", std::to_string(config.l_min));
  replace_all(prompt, "{l_max}", std::to_string(config.l_max));
  replace_all(prompt, "{question}", question);
  return prompt;
}

std::string build_prompt(const std::string& question, const GroupLabel& kind, const PreprocessConfig& config) {
  static const PromptLibrary lib = PromptLibrary::defaults();
  return lib.build(question, kind, config);
}

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read replay fixture " + path.string());
  ReplayStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      store.add(j.at("id").get<std::string>(), parse_group_label(j.at("kind").get<std::string>()),
                j.at("text").get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(std::string("replay fixture: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(std::string("replay fixture: ") + e.what(), line_no);
    }
  }
  return store;
}

void ReplayStore::add(const std::string& id, const GroupLabel& kind, std::string text) {
  entries_[{id, kind.name()}] = std::move(text);
}

std::optional<std::string> ReplayStore::find(const std::string& id, const GroupLabel& kind) const {
  auto it = entries_.find({id, kind.name()});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

CompletionFn http_completion(const GenProviderConfig& provider) {
  return [provider](const std::string& prompt) {
    json body = {{"model", provider.model}, {"prompt", prompt}, {"stream", false}};
    if (provider.temperature) body["options"] = {{"temperature", *provider.temperature}};
    const auto reply = detail::post_json(provider.endpoint, "/api/generate", body, provider.timeout_seconds);
    if (!reply.is_object() || !reply.contains("response") || !reply.at("response").is_string()) {
      throw ProviderError(provider.endpoint + "/api/generate: reply has no \"response\" string");
    }
    return reply.at("response").get<std::string>();
  };
}

AnswerGenerator::AnswerGenerator(GenProviderConfig provider, PreprocessConfig preprocess, PromptLibrary prompts,
                                 CompletionFn completion)
    : provider_(std::move(provider)),
      preprocess_(preprocess),
      prompts_(std::move(prompts)),
      completion_(std::move(completion)) {
  provider_.validate();
  preprocess_.validate();
  if (!completion_) completion_ = http_completion(provider_);
  if (provider_.replay_path) replay_ = ReplayStore::load(*provider_.replay_path);
}

GeneratedAnswer AnswerGenerator::generate(const QARecord& record, const GroupLabel& kind) const {
  require_generated_kind(kind);
  if (replay_) {
    if (auto text = replay_->find(record.id, kind)) {
      const auto n = word_count(*text);
      const bool ok = n >= static_cast<std::size_t>(preprocess_.l_min) && n <= static_cast<std::size_t>(preprocess_.l_max);
      return {*text, ok, 0, true};
    }
  }

  const auto prompt = prompts_.build(record.question, kind, preprocess_);
  GeneratedAnswer last;
  for (int attempt = 1; attempt <= provider_.max_retries + 1; ++attempt) {
    std::string reply;
    try {
      reply = completion_(prompt);
    } catch (const ProviderError& e) {
      if (attempt > provider_.max_retries) {
        throw ProviderError("generation for " + record.id + "/" + kind.name() + " via " + provider_.endpoint +
                            " failed after " + std::to_string(attempt) + " attempts: " + e.what());
      }
      continue;
    }
    auto text = clean_text(reply, preprocess_);
    if (text.empty()) {
      throw ProviderError("empty completion from " + provider_.endpoint + " for " + record.id + "/" + kind.name());
    }
    const auto n = word_count(text);
    last = {std::move(text), n >= static_cast<std::size_t>(preprocess_.l_min) && n <= static_cast<std::size_t>(preprocess_.l_max),
            attempt, false};
    if (last.in_window) return last;
  }
  return last;
}

std::vector<QARecord> AnswerGenerator::augment(std::span<const QARecord> records, std::span<const GroupLabel> kinds,
                                               std::size_t* out_of_window) const {
  struct Task {
    std::size_t record;
    GroupLabel kind;
  };
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const auto& kind : kinds) {
      require_generated_kind(kind);
      const auto& rec = records[r];
      bool present = kind.kind() == GroupLabel::Kind::kModelCorrect
                         ? rec.model_correct.has_value()
                         : std::any_of(rec.hallucinations.begin(), rec.hallucinations.end(),
                                       [&](const HallucinationEntry& h) { return h.type == kind.type(); });
      if (!present) tasks.push_back({r, kind});
    }
  }

  std::vector<std::optional<GeneratedAnswer>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size() && !failed; t = next++) {
      try {
        results[t] = generate(records[tasks[t].record], tasks[t].kind);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        failed = true;
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(provider_.parallelism), tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<QARecord> out(records.begin(), records.end());
  std::size_t flagged = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& rec = out[tasks[t].record];
    const auto& answer = *results[t];
    if (!answer.in_window) ++flagged;
    auto text = clean_text(answer.text, preprocess_);
    if (tasks[t].kind.kind() == GroupLabel::Kind::kModelCorrect) {
      rec.model_correct = std::move(text);
    } else {
      rec.hallucinations.push_back({tasks[t].kind.type(), std::move(text)});
    }
  }
  if (out_of_window != nullptr) *out_of_window = flagged;
  return out;
}

GeneratedAnswer generate_answer(const QARecord& record, const GroupLabel& kind, const GenProviderConfig& provider,
                                const PreprocessConfig& preprocess) {
  return AnswerGenerator(provider, preprocess).generate(record, kind);
}

}  // namespace hallucmap
