#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "hallucmap/corpus.hpp"
#include "hallucmap/error.hpp"
#include "hallucmap/labels.hpp"

using namespace hallucmap;

namespace {

std::string words(int n, const std::string& stem = "w") {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
  return s;
}

QARecord record(std::string id, std::string question, std::string gt) {
  return QARecord{std::move(id), std::move(question), std::move(gt), std::nullopt, {}};
}

// Random text over an alphabet that exercises tags, case, whitespace and control bytes.
std::string random_text(std::mt19937_64& gen) {
  static const std::vector<std::string> atoms = {"a", "B", "c", " ", "  ", "\t", "\n", "<", ">", "<b>", "</p>",
                                                 "x<y", "\x01", "\x7f", "Zz", "é", "!", "\r\n"};
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  std::uniform_int_distribution<int> len(0, 30);
  std::string s;
  for (int i = len(gen); i > 0; --i) s += atoms[pick(gen)];
  return s;
}

std::size_t split_count(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

TEST_CASE("group labels parse, print and order by name") {
  CHECK(GroupLabel::ground_truth().name() == "ground_truth");
  CHECK(GroupLabel::model_correct().name() == "model_correct");
  for (auto t : kAllHallucinationTypes) {
    const auto label = GroupLabel::hallucinated(t);
    CHECK(parse_group_label(label.name()) == label);
    CHECK(label.is_hallucinated());
  }
  CHECK(GroupLabel::ground_truth() < GroupLabel::hallucinated(HallucinationType::kFabrication));
  CHECK(GroupLabel::hallucinated(HallucinationType::kFabrication) < GroupLabel::model_correct());
  CHECK_THROWS_AS(parse_group_label("correct"), ParseError);
  CHECK_THROWS_AS(parse_hallucination_type("distortion"), ParseError);
}

TEST_CASE("parse_corpus") {
  SUBCASE("empty input gives no records") {
    std::istringstream in("");
    CHECK(parse_corpus(in).empty());
  }
  SUBCASE("records keep file order and optional fields") {
    std::istringstream in(
        R"({"id":"b","question":"q1","ground_truth":"g1"})"
        "\n\n"
        R"({"id":"a","question":"q2","ground_truth":"g2","model_correct":"m","hallucinations":[{"type":"fabrication","text":"h"}]})"
        "\n");
    const auto r = parse_corpus(in);
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == "b");
    CHECK(r[1].id == "a");
    CHECK(r[1].model_correct == "m");
    REQUIRE(r[1].hallucinations.size() == 1);
    CHECK(r[1].hallucinations[0].type == HallucinationType::kFabrication);
  }
  SUBCASE("missing question on line 3 names line 3") {
    std::istringstream in(
        R"({"id":"1","question":"q","ground_truth":"g"})"
        "\n"
        R"({"id":"2","question":"q","ground_truth":"g"})"
        "\n"
        R"({"id":"3","ground_truth":"g"})"
        "\n");
    try {
      parse_corpus(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("question") != std::string::npos);
    }
  }
  SUBCASE("malformed JSON and bad hallucination type are parse errors") {
    std::istringstream bad("{not json}\n");
    CHECK_THROWS_AS(parse_corpus(bad), ParseError);
    std::istringstream bad_type(R"({"id":"1","question":"q","ground_truth":"g","hallucinations":[{"type":"x","text":"t"}]})");
    try {
      parse_corpus(bad_type);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("duplicate id and empty ground truth are validation errors") {
    std::istringstream dup(R"({"id":"1","question":"q","ground_truth":"g"})"
                           "\n"
                           R"({"id":"1","question":"r","ground_truth":"g"})");
    CHECK_THROWS_AS(parse_corpus(dup), ValidationError);
    std::istringstream empty_gt(R"({"id":"1","question":"q","ground_truth":" <br> "})");
    CHECK_THROWS_AS(parse_corpus(empty_gt), ValidationError);
  }
  SUBCASE("unreadable file is an I/O error") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IoError);
  }
}

TEST_CASE("corpus round trip through save and load") {
  const auto dir = std::filesystem::temp_directory_path() / "hallucmap_corpus_rt";
  std::filesystem::create_directories(dir);
  QARecord r = record("r1", "who?", "someone \"quoted\" → here");
  r.model_correct = "m";
  r.hallucinations = {{HallucinationType::kMisinterpretation, "h1"}, {HallucinationType::kFabrication, "h2"}};
  save_corpus({r, record("r2", "q", "g")}, dir / "c.jsonl");
  const auto back = load_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == r);
  std::filesystem::remove_all(dir);
}

TEST_CASE("clean_text examples") {
  CHECK(clean_text("<b>Hello</b>  World!") == "hello world!");
  CHECK(clean_text("") == "");
  PreprocessConfig keep_case;
  keep_case.lowercase = false;
  CHECK(clean_text("Already clean", keep_case) == "Already clean");
  CHECK(clean_text("a<br/>b") == "a b");
  CHECK(clean_text("<<b>b>x") == "b>x");
  CHECK(clean_text("tab\tand\x01 bell") == "tab and bell");
  PreprocessConfig raw_html;
  raw_html.strip_html = false;
  CHECK(clean_text("<b>X</b>", raw_html) == "<b>x</b>");
}

TEST_CASE("word_count") {
  CHECK(word_count("") == 0);
  CHECK(word_count("a b  c") == 3);
  CHECK(word_count("  lead and trail  ") == 3);
  const auto fifty = words(50);
  CHECK(word_count(fifty) == split_count(fifty));
  CHECK(word_count(fifty) == 50);
}

TEST_CASE("clean_text properties on random inputs") {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 5000; ++i) {
    const auto x = random_text(gen);
    const auto once = clean_text(x);
    CHECK(clean_text(once) == once);
    CHECK(word_count(once) == split_count(once));
    CHECK(once.find("  ") == std::string::npos);
    if (!once.empty()) {
      CHECK(once.front() != ' ');
      CHECK(once.back() != ' ');
    }
  }
}

TEST_CASE("filter_by_length boundaries") {
  const PreprocessConfig config;
  std::vector<QARecord> rs = {record("49", "q49", words(49)), record("50", "q50", words(50)),
                              record("70", "q70", words(70)), record("71", "q71", words(71))};
  const auto kept = filter_by_length(rs, config);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "50");
  CHECK(kept[1].id == "70");

  SUBCASE("selected fields only") {
    QARecord r = record("x", "q", words(60));
    r.model_correct = words(10);
    CHECK(filter_by_length({r}, config).empty());
    CHECK(filter_by_length({r}, config, kGroundTruthField).size() == 1);
    r.hallucinations = {{HallucinationType::kFabrication, words(80)}};
    CHECK(filter_by_length({r}, config, kGroundTruthField | kModelCorrectField).empty());
    r.model_correct = words(55);
    CHECK(filter_by_length({r}, config, kGroundTruthField | kModelCorrectField).size() == 1);
    CHECK(filter_by_length({r}, config).empty());
  }
  SUBCASE("invalid window") {
    PreprocessConfig bad;
    bad.l_min = 0;
    CHECK_THROWS_AS(filter_by_length(rs, bad), ConfigError);
    bad.l_min = 80;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("filter_by_length output is a subsequence") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> len(40, 80);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<QARecord> rs;
    for (int i = 0; i < 40; ++i) {
      auto r = record(std::to_string(i), "q" + std::to_string(i), words(len(gen)));
      if (i % 3 == 0) r.model_correct = words(len(gen));
      rs.push_back(std::move(r));
    }
    const auto kept = filter_by_length(rs, PreprocessConfig{});
    std::size_t j = 0;
    for (const auto& k : kept) {
      while (j < rs.size() && !(rs[j] == k)) ++j;
      CHECK(j < rs.size());
      ++j;
    }
  }
}

TEST_CASE("dedup") {
  SUBCASE("identical cleaned question keeps the first") {
    const auto out = dedup({record("1", "Who?", "a"), record("2", "who?", "b"), record("3", "<i>WHO?</i>", "c")});
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == "1");
  }
  SUBCASE("case differences are duplicates only with lowercase on") {
    PreprocessConfig keep_case;
    keep_case.lowercase = false;
    CHECK(dedup({record("1", "Who?", "a"), record("2", "who?", "b")}, keep_case).size() == 2);
  }
  SUBCASE("distinct corpus is unchanged") {
    std::vector<QARecord> rs = {record("1", "a", "x"), record("2", "b", "y")};
    CHECK(dedup(rs) == rs);
  }
  SUBCASE("repeated hallucination entries collapse") {
    auto r = record("1", "q", "g");
    r.hallucinations = {{HallucinationType::kFabrication, "t"},
                        {HallucinationType::kFabrication, "t"},
                        {HallucinationType::kMisinterpretation, "t"}};
    const auto out = dedup({r});
    CHECK(out[0].hallucinations.size() == 2);
  }
  SUBCASE("random corpora: distinct questions and no growth") {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> q(0, 15);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<QARecord> rs;
      for (int i = 0; i < 30; ++i) {
        const int v = q(gen);
        rs.push_back(record(std::to_string(i), (v % 2 ? "Q" : "q") + std::to_string(v), "g"));
      }
      const auto out = dedup(rs);
      CHECK(out.size() <= rs.size());
      std::set<std::string> seen;
      for (const auto& r : out) CHECK(seen.insert(clean_text(r.question)).second);
    }
  }
}

TEST_CASE("clean_record cleans every text field") {
  auto r = record("1", "<b>Q</b>", "G  T");
  r.model_correct = "M\tC";
  r.hallucinations = {{HallucinationType::kFabrication, "H<br>X"}};
  const auto c = clean_record(r);
  CHECK(c.question == "q");
  CHECK(c.ground_truth == "g t");
  CHECK(c.model_correct == "m c");
  CHECK(c.hallucinations[0].text == "h x");
  CHECK(c.id == "1");
}
