#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hallucmap/error.hpp"
#include "hallucmap/generator.hpp"
#include "mock_provider.hpp"

using namespace hallucmap;
namespace fs = std::filesystem;

namespace {

const GroupLabel kMc = GroupLabel::model_correct();
const GroupLabel kFab = GroupLabel::hallucinated(HallucinationType::kFabrication);

std::string words(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + std::string("word");
  return s;
}

QARecord rome() { return QARecord{"q1", "who founded rome", "romulus founded rome", std::nullopt, {}}; }

GenProviderConfig quick_provider(const std::string& endpoint) {
  GenProviderConfig p;
  p.endpoint = endpoint;
  p.timeout_seconds = 5;
  return p;
}

}  // namespace

TEST_CASE("build_prompt") {
  const PreprocessConfig window;
  const auto mc = build_prompt("who founded rome", kMc, window);
  CHECK(mc.find("who founded rome") != std::string::npos);
  CHECK(mc.find("between 50 and 70 words") != std::string::npos);
  CHECK(mc.find("{") == std::string::npos);

  const auto fab = build_prompt("who founded rome", kFab, window);
  CHECK(fab.find("who founded rome") != std::string::npos);
  CHECK(fab.find("plausible but non-existent") != std::string::npos);
  CHECK(fab.find("between 50 and 70 words") != std::string::npos);
  CHECK(build_prompt("who founded rome", kFab, window) == fab);

  PreprocessConfig narrow;
  narrow.l_min = 20;
  narrow.l_max = 30;
  CHECK(build_prompt("q", kMc, narrow).find("between 20 and 30 words") != std::string::npos);
  CHECK_THROWS_AS(build_prompt("q", GroupLabel::ground_truth(), window), UsageError);

  for (auto t : kAllHallucinationTypes) CHECK_NOTHROW(build_prompt("q", GroupLabel::hallucinated(t), window));
}

TEST_CASE("PromptLibrary") {
  auto lib = PromptLibrary::defaults();
  CHECK_THROWS_AS(lib.set(kMc, "Answer {question}"), ValidationError);
  lib.set(kMc, "Q: {question} ({l_min}-{l_max})");
  CHECK(lib.build("x", kMc, {}) == "Q: x (50-70)");

  const auto dir = fs::temp_directory_path() / "hallucmap_prompts_test";
  fs::create_directories(dir);
  std::ofstream(dir / "model_correct.txt") << "custom {question} {l_min} {l_max}";
  const auto custom = PromptLibrary::with_overrides(dir);
  CHECK(custom.build("q", kMc, {}) == "custom q 50 70");
  CHECK(custom.build("q", kFab, {}) == PromptLibrary::defaults().build("q", kFab, {}));
  fs::remove_all(dir);
}

TEST_CASE("GenProviderConfig validation") {
  GenProviderConfig p;
  CHECK_NOTHROW(p.validate());
  p.max_retries = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.max_retries = 0;
  p.endpoint.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("generation with a scripted completion") {
  const PreprocessConfig window;
  SUBCASE("short reply then an in-window reply") {
    int calls = 0;
    AnswerGenerator gen(GenProviderConfig{}, window, PromptLibrary::defaults(), [&](const std::string&) {
      return ++calls == 1 ? words(30) : words(60);
    });
    const auto a = gen.generate(rome(), kMc);
    CHECK(a.in_window);
    CHECK(a.attempts == 2);
    CHECK(word_count(a.text) == 60);
  }
  SUBCASE("retries exhausted returns the last reply flagged") {
    GenProviderConfig p;
    p.max_retries = 2;
    int calls = 0;
    AnswerGenerator gen(p, window, PromptLibrary::defaults(), [&](const std::string&) {
      ++calls;
      return words(10 + calls);
    });
    const auto a = gen.generate(rome(), kMc);
    CHECK_FALSE(a.in_window);
    CHECK(calls == 3);
    CHECK(word_count(a.text) == 13);
  }
  SUBCASE("empty completion is a provider error") {
    AnswerGenerator gen(GenProviderConfig{}, window, PromptLibrary::defaults(),
                        [](const std::string&) { return std::string(" <p></p> "); });
    CHECK_THROWS_AS(gen.generate(rome(), kMc), ProviderError);
  }
  SUBCASE("ground truth cannot be generated") {
    AnswerGenerator gen(GenProviderConfig{}, window, PromptLibrary::defaults(),
                        [](const std::string&) { return words(60); });
    CHECK_THROWS_AS(gen.generate(rome(), GroupLabel::ground_truth()), UsageError);
  }
}

TEST_CASE("replay fixtures") {
  const auto dir = fs::temp_directory_path() / "hallucmap_replay_test";
  fs::create_directories(dir);
  const auto path = dir / "replay.jsonl";
  std::ofstream(path) << R"({"id":"q1","kind":"model_correct","text":"Romulus, per legend.  <b>Stored</b>"})"
                      << "\n\n"
                      << R"({"id":"q1","kind":"hallucinated_fabrication","text":")" << words(55) << R"("})" << "\n";

  GenProviderConfig p;
  p.endpoint = "http://127.0.0.1:1";
  p.replay_path = path;
  int calls = 0;
  AnswerGenerator gen(p, PreprocessConfig{}, PromptLibrary::defaults(), [&](const std::string&) {
    ++calls;
    return words(60);
  });
  const auto a = gen.generate(rome(), kMc);
  CHECK(a.text == "Romulus, per legend.  <b>Stored</b>");
  CHECK(a.replayed);
  CHECK(gen.generate(rome(), kMc).text == a.text);
  CHECK(calls == 0);

  SUBCASE("augment stores cleaned text and only fills missing kinds") {
    QARecord has_mc = rome();
    has_mc.id = "q2";
    has_mc.model_correct = "kept as is";
    const std::vector<QARecord> records = {rome(), has_mc};
    const std::vector<GroupLabel> kinds = {kMc, kFab};
    std::size_t flagged = 0;
    const auto out = gen.augment(records, kinds, &flagged);
    REQUIRE(out.size() == 2);
    CHECK(out[0].model_correct == "romulus, per legend. stored");
    REQUIRE(out[0].hallucinations.size() == 1);
    CHECK(out[0].hallucinations[0].text == words(55));
    CHECK(out[1].model_correct == "kept as is");
    CHECK(out[1].hallucinations.size() == 1);
    CHECK(calls == 1);  // q2 fabrication is not in the fixture
    CHECK(flagged == 1);  // the replayed model answer has 4 words
  }
  SUBCASE("malformed fixture line") {
    std::ofstream(dir / "bad.jsonl") << R"({"id":"q1","kind":"model_correct","text":"a"})" << "\n"
                                     << R"({"id":"q1","kind":"nonsense","text":"a"})" << "\n";
    try {
      ReplayStore::load(dir / "bad.jsonl");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("HTTP generation endpoint") {
  MockProvider provider;
  SUBCASE("wire format") {
    provider.on_generate([](const nlohmann::json&, int) { return nlohmann::json{{"response", words(60)}}; });
    auto p = quick_provider(provider.endpoint());
    p.temperature = 0.2;
    const auto a = generate_answer(rome(), kFab, p);
    CHECK(a.in_window);
    const auto req = provider.requests().at(0);
    CHECK(req.at("model") == "llama3.1");
    CHECK(req.at("stream") == false);
    CHECK(req.at("options").at("temperature") == 0.2);
    CHECK(req.at("prompt").get<std::string>().find("who founded rome") != std::string::npos);
  }
  SUBCASE("no temperature unless configured") {
    provider.on_generate([](const nlohmann::json&, int) { return nlohmann::json{{"response", words(60)}}; });
    generate_answer(rome(), kMc, quick_provider(provider.endpoint()));
    CHECK_FALSE(provider.requests().at(0).contains("options"));
  }
  SUBCASE("transient failure is retried") {
    provider.on_generate([](const nlohmann::json&, int call) {
      return call == 1 ? MockProvider::fail() : nlohmann::json{{"response", words(55)}};
    });
    const auto a = generate_answer(rome(), kMc, quick_provider(provider.endpoint()));
    CHECK(a.attempts == 2);
    CHECK(provider.generate_calls() == 2);
  }
  SUBCASE("persistent failure names the endpoint") {
    provider.on_generate([](const nlohmann::json&, int) { return MockProvider::fail(); });
    auto p = quick_provider(provider.endpoint());
    p.max_retries = 1;
    try {
      generate_answer(rome(), kMc, p);
      FAIL("expected a provider error");
    } catch (const ProviderError& e) {
      CHECK(std::string(e.what()).find(provider.endpoint()) != std::string::npos);
    }
    CHECK(provider.generate_calls() == 2);
  }
  SUBCASE("reply without a response field") {
    provider.on_generate([](const nlohmann::json&, int) { return nlohmann::json{{"text", "x"}}; });
    auto p = quick_provider(provider.endpoint());
    p.max_retries = 0;
    CHECK_THROWS_AS(generate_answer(rome(), kMc, p), ProviderError);
  }
}

TEST_CASE("offline provider without fixture") {
  auto p = quick_provider("http://127.0.0.1:1");
  p.max_retries = 0;
  try {
    generate_answer(rome(), kMc, p);
    FAIL("expected a provider error");
  } catch (const ProviderError& e) {
    CHECK(std::string(e.what()).find("http://127.0.0.1:1") != std::string::npos);
  }
}
