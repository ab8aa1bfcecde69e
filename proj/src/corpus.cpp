#include "hallucmap/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hallucmap/error.hpp"

namespace hallucmap {

namespace {

using nlohmann::json;

bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }
bool is_control(unsigned char c) { return (c < 0x20 && !is_space(c)) || c == 0x7F; }

std::string required_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(std::string("missing field \"") + field + "\"", line);
  if (!it->is_string()) throw ParseError(std::string("field \"") + field + "\" must be a string", line);
  return it->get<std::string>();
}

QARecord parse_record(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!obj.is_object()) throw ParseError("record must be a JSON object", line);

  QARecord record;
  record.id = required_string(obj, "id", line);
  record.question = required_string(obj, "question", line);
  record.ground_truth = required_string(obj, "ground_truth", line);
  if (auto it = obj.find("model_correct"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("field \"model_correct\" must be a string", line);
    record.model_correct = it->get<std::string>();
  }
  if (auto it = obj.find("hallucinations"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("field \"hallucinations\" must be an array", line);
    for (const auto& entry : *it) {
      if (!entry.is_object()) throw ParseError("hallucination entry must be an object", line);
      HallucinationEntry h{HallucinationType::kFabrication, required_string(entry, "text", line)};
      try {
        h.type = parse_hallucination_type(required_string(entry, "type", line));
      } catch (const ParseError& e) {
        if (e.line() != 0) throw;
        throw ParseError(e.what(), line);
      }
      record.hallucinations.push_back(std::move(h));
    }
  }
  if (clean_text(record.ground_truth).empty()) {
    throw ValidationError("line " + std::to_string(line) + ": ground_truth is empty after cleaning");
  }
  return record;
}

std::string strip_tags(std::string text) {
  // Repeat until no tag remains so that removal cannot expose a new tag.
  for (;;) {
    std::string out;
    out.reserve(text.size());
    bool removed = false;
    std::size_t i = 0;
    while (i < text.size()) {
      if (text[i] == '<') {
        auto close = text.find('>', i + 1);
        if (close != std::string::npos) {
          out.push_back(' ');
          i = close + 1;
          removed = true;
          continue;
        }
      }
      out.push_back(text[i++]);
    }
    if (!removed) return out;
    text = std::move(out);
  }
}

bool in_window(std::string_view text, const PreprocessConfig& config) {
  auto n = word_count(text);
  return n >= static_cast<std::size_t>(config.l_min) && n <= static_cast<std::size_t>(config.l_max);
}

}  // namespace

void PreprocessConfig::validate() const {
  if (l_min <= 0 || l_min > l_max) {
    throw ConfigError("length window must satisfy 0 < l_min <= l_max (got " + std::to_string(l_min) +
                      ", " + std::to_string(l_max) + ")");
  }
}

std::vector<QARecord> parse_corpus(std::istream& in) {
  std::vector<QARecord> records;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto record = parse_record(line, line_no);
    if (!ids.insert(record.id).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate id '" + record.id + "'");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<QARecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus " + path.string());
  return parse_corpus(in);
}

std::string to_jsonl(const QARecord& record) {
  json obj = {{"id", record.id}, {"question", record.question}, {"ground_truth", record.ground_truth}};
  if (record.model_correct) obj["model_correct"] = *record.model_correct;
  if (!record.hallucinations.empty()) {
    json entries = json::array();
    for (const auto& h : record.hallucinations) {
      entries.push_back({{"type", std::string(to_string(h.type))}, {"text", h.text}});
    }
    obj["hallucinations"] = std::move(entries);
  }
  return obj.dump();
}

void save_corpus(const std::vector<QARecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& record : records) out << to_jsonl(record) << '\n';
  if (!out) throw IoError("failed writing corpus " + path.string());
}

std::string clean_text(std::string_view text, const PreprocessConfig& config) {
  std::string work(text);
  if (config.strip_html) work = strip_tags(std::move(work));

  std::string out;
  out.reserve(work.size());
  bool pending_space = false;
  for (unsigned char c : work) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (is_control(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (config.lowercase && c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

QARecord clean_record(const QARecord& record, const PreprocessConfig& config) {
  QARecord out = record;
  out.question = clean_text(record.question, config);
  out.ground_truth = clean_text(record.ground_truth, config);
  if (record.model_correct) out.model_correct = clean_text(*record.model_correct, config);
  for (auto& h : out.hallucinations) h.text = clean_text(h.text, config);
  return out;
}

std::vector<QARecord> filter_by_length(const std::vector<QARecord>& records, const PreprocessConfig& config,
                                       std::uint8_t fields) {
  config.validate();
  std::vector<QARecord> kept;
  for (const auto& record : records) {
    bool ok = true;
    if ((fields & kGroundTruthField) != 0U) ok = ok && in_window(record.ground_truth, config);
    if ((fields & kModelCorrectField) != 0U && record.model_correct) {
      ok = ok && in_window(*record.model_correct, config);
    }
    if ((fields & kHallucinationFields) != 0U) {
      for (const auto& h : record.hallucinations) ok = ok && in_window(h.text, config);
    }
    if (ok) kept.push_back(record);
  }
  return kept;
}

std::vector<QARecord> dedup(const std::vector<QARecord>& records, const PreprocessConfig& config) {
  std::vector<QARecord> kept;
  std::unordered_set<std::string> seen;
  for (const auto& record : records) {
    if (!seen.insert(clean_text(record.question, config)).second) continue;
    QARecord copy = record;
    std::vector<HallucinationEntry> unique;
    for (const auto& h : record.hallucinations) {
      bool repeated = false;
      for (const auto& u : unique) repeated = repeated || u == h;
      if (!repeated) unique.push_back(h);
    }
    copy.hallucinations = std::move(unique);
    kept.push_back(std::move(copy));
  }
  return kept;
}

}  // namespace hallucmap
