#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hallucmap/labels.hpp"

namespace hallucmap {

struct HallucinationEntry {
  HallucinationType type;
  std::string text;

  friend bool operator==(const HallucinationEntry&, const HallucinationEntry&) = default;
};

/// One question with its reference answer and any generated answers.
struct QARecord {
  std::string id;
  std::string question;
  std::string ground_truth;
  std::optional<std::string> model_correct;
  std::vector<HallucinationEntry> hallucinations;

  friend bool operator==(const QARecord&, const QARecord&) = default;
};

struct PreprocessConfig {
  int l_min = 50;
  int l_max = 70;
  bool lowercase = true;
  bool strip_html = true;

  /// Throws ConfigError unless 0 < l_min <= l_max.
  void validate() const;
};

/// Which answer fields the length filter inspects. Absent fields are skipped.
enum AnswerFields : std::uint8_t {
  kGroundTruthField = 1U << 0U,
  kModelCorrectField = 1U << 1U,
  kHallucinationFields = 1U << 2U,
  kAllAnswerFields = kGroundTruthField | kModelCorrectField | kHallucinationFields,
};

/// Reads line-delimited JSON records. Blank lines are skipped; line numbers in
/// errors are 1-based and count every physical line.
std::vector<QARecord> load_corpus(const std::filesystem::path& path);
std::vector<QARecord> parse_corpus(std::istream& in);

void save_corpus(const std::vector<QARecord>& records, const std::filesystem::path& path);
std::string to_jsonl(const QARecord& record);

/// Removes tags and control characters, collapses whitespace, trims, and
/// optionally lowercases (ASCII). Idempotent.
std::string clean_text(std::string_view text, const PreprocessConfig& config = {});

/// Number of maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view text);

/// Applies clean_text to every text field of the record.
QARecord clean_record(const QARecord& record, const PreprocessConfig& config = {});

/// Keeps records whose selected answer fields all have a word count in
/// [l_min, l_max]. Order is preserved.
std::vector<QARecord> filter_by_length(const std::vector<QARecord>& records,
                                       const PreprocessConfig& config,
                                       std::uint8_t fields = kAllAnswerFields);

/// Keeps the first record for each cleaned question and drops repeated
/// (type, text) hallucination entries within a record.
std::vector<QARecord> dedup(const std::vector<QARecord>& records, const PreprocessConfig& config = {});

}  // namespace hallucmap
