#include <doctest.h>

#include <cctype>
#include <cstdlib>
#include <deque>
#include <filesystem>

#include <json.hpp>

#include "optisynth/resources.hpp"
#include "optisynth/rng.hpp"
#include "optisynth/teacher.hpp"

using namespace optisynth;

namespace {

std::string upper(std::string s) {
  for (char &c : s)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// Scripted transport: each entry is either a status/body pair or a
/// transport failure (status 0).
class FaultyTransport : public HttpTransport {
public:
  std::deque<HttpResponse> script;
  std::vector<std::string> bodies;
  std::vector<std::string> authorization;

  HttpResponse post(const std::string &, const std::string &body,
                    const std::vector<std::pair<std::string, std::string>> &headers,
                    std::chrono::seconds) override {
    bodies.push_back(body);
    for (const auto &[k, v] : headers)
      if (k == "Authorization")
        authorization.push_back(v);
    REQUIRE(!script.empty());
    const HttpResponse r = script.front();
    script.pop_front();
    if (r.status == 0)
      throw TransportError("connection refused");
    return r;
  }
};

std::string completion(const std::string &content) {
  nlohmann::json j;
  j["choices"] = {{{"message", {{"role", "assistant"}, {"content", content}}}}};
  return j.dump();
}

std::filesystem::path temp_path(const std::string &name) {
  return std::filesystem::temp_directory_path() / ("optisynth_test_" + name);
}

} // namespace

TEST_CASE("every prompt renders byte-identical to its golden file") {
  const PromptLibrary &lib = PromptLibrary::bundled();
  CHECK(lib.ids().size() == 18);
  for (const std::string &id : lib.ids()) {
    INFO(id);
    Bindings b;
    for (const auto &slot : lib.get(id).required)
      b[slot] = "<<" + upper(slot) + ">>";
    const std::string golden = read_file(
        std::filesystem::path(OPTISYNTH_SOURCE_DIR) / "tests" / "golden" / "prompts" / (id + ".txt"));
    CHECK(lib.render(id, b) == golden);
  }
  CHECK(lib.get("formulation_verifier").partial);
  CHECK_FALSE(lib.get("decomposition").partial);
}

TEST_CASE("prompt text examples") {
  const std::string d = render_prompt("decomposition", {{"description", "D"}});
  CHECK(d.find("\nHere is a description of the problem we need you to find the components for:\n") !=
        std::string::npos);
  CHECK(d.find("\n-----\nD\n-----") != std::string::npos);
  const std::string p = render_prompt(
      "programmer", {{"solver", "X"}, {"description", "D"}, {"components", "C"}, {"formulation", "F"}});
  CHECK(p.find("create a Python script to solve an optimization problem using X") !=
        std::string::npos);
  CHECK_THROWS_AS(render_prompt("decomposition", {}), ConfigError);
  CHECK_THROWS_AS(render_prompt("no_such_prompt", {}), ConfigError);
  CHECK(prompt_slots("a {x} {y_z} {Bad} {} {q") == std::set<std::string>{"x", "y_z"});
}

TEST_CASE("fenced extraction") {
  CHECK(extract_fenced("reasoning...\n```\nANSWER\n```") == "ANSWER");
  CHECK(extract_fenced("a\n```python\nx = 1\n```\nb\n```\nlast\nblock\n```\ntrailer") ==
        "last\nblock");
  CHECK_THROWS_AS(extract_fenced("no fences at all"), ExtractionError);
  CHECK_THROWS_AS(extract_fenced("```\nunterminated"), ExtractionError);
  const FencedOutput out = split_fenced("  I reason.\n\n```text\nX\n```\n");
  CHECK(out.reasoning == "I reason.");
  CHECK(out.content == "X");
}

TEST_CASE("property: extraction inverts fencing for fence-free payloads") {
  Rng rng(5);
  const std::string alphabet = "ab c\n`{}\t";
  for (int k = 0; k < 300; ++k) {
    std::string payload;
    const auto len = rng.uniform_int(0, 40);
    for (long long i = 0; i < len; ++i)
      payload += alphabet[rng.index(alphabet.size())];
    if (payload.find("```") != std::string::npos)
      continue;
    // A payload line that starts with a fence would be one; the generator
    // only produces single or double backticks in a row.
    CHECK(extract_fenced("```\n" + payload + "\n```") == payload);
  }
}

TEST_CASE("fenced completion asks again once") {
  int call = 0;
  FunctionBackend backend([&](const ChatExchange &ex) {
    ++call;
    if (call == 1)
      return std::string("I forgot the fences");
    CHECK(ex.messages.size() == 3);
    CHECK(ex.messages[1].role == "assistant");
    return std::string("```\nfixed\n```");
  });
  const FencedReply r = complete_fenced(backend, make_exchange("decomposition", {{"description", "D"}}));
  CHECK(r.output.content == "fixed");
  CHECK(r.calls == 2);
  CHECK(r.reasked);

  FunctionBackend stubborn([](const ChatExchange &) { return std::string("never"); });
  CHECK_THROWS_AS(complete_fenced(stubborn, make_exchange("decomposition", {{"description", "D"}})),
                  ExtractionError);
  CHECK(stubborn.calls() == 2);
}

TEST_CASE("exchange defaults and validation") {
  const ChatExchange ex = make_exchange("decomposition", {{"description", "D"}});
  CHECK(ex.temperature == 0.7);
  CHECK(ex.seed == 0);
  CHECK_NOTHROW(ex.validate());
  ChatExchange bad = ex;
  bad.messages[0].role = "tool";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.messages.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("request hashes normalize whitespace and depend on identity") {
  const auto h = [](const std::string &id, const Bindings &b) {
    ChatExchange ex;
    ex.prompt_id = id;
    ex.bindings = b;
    return request_hash(ex);
  };
  CHECK(h("p", {{"a", "x\ny"}}) == h("p", {{"a", "x  \r\ny\n\n"}}));
  CHECK(h("p", {{"a", "x"}}) != h("q", {{"a", "x"}}));
  CHECK(h("p", {{"a", "x"}}) != h("p", {{"a", "y"}}));
  CHECK(h("p", {{"a", "x"}, {"b", ""}}) != h("p", {{"ab", "x"}}));
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("replay answers matching requests and reports mismatches") {
  const ChatExchange a = make_exchange("decomposition", {{"description", "A"}});
  const ChatExchange b = make_exchange("decomposition", {{"description", "B"}});
  const ChatExchange c = make_exchange("decomposition", {{"description", "C"}});
  ReplayBackend replay({{hash_hex(request_hash(a)), "decomposition", "answer A"},
                        {hash_hex(request_hash(b)), "decomposition", "answer B"}});
  CHECK(replay.complete(b).text == "answer B"); // arrival order may differ
  try {
    replay.complete(c);
    FAIL("expected mismatch");
  } catch (const ReplayMismatchError &e) {
    CHECK(e.expected() == hash_hex(request_hash(a)));
    CHECK(e.actual().rfind(hash_hex(request_hash(c)), 0) == 0);
  }
  CHECK_THROWS_AS(replay.check_exhausted(), Error);
  CHECK(replay.complete(a).text == "answer A");
  CHECK(replay.exhausted());
  CHECK_NOTHROW(replay.check_exhausted());
  CHECK_THROWS_AS(replay.complete(a), ReplayMismatchError);
}

TEST_CASE("recorded transcripts replay through a file") {
  FunctionBackend teacher([](const ChatExchange &ex) { return "re: " + ex.bindings.at("description"); });
  RecordingBackend rec(teacher);
  for (const char *d : {"one", "two", "one"})
    rec.complete(make_exchange("decomposition", {{"description", d}}));
  const auto path = temp_path("transcript.jsonl");
  write_transcript(path, rec.records());
  auto replay = ReplayBackend::open(path);
  CHECK(replay->remaining() == 3);
  CHECK(replay->complete(make_exchange("decomposition", {{"description", "one"}})).text == "re: one");
  CHECK(replay->complete(make_exchange("decomposition", {{"description", "one"}})).text == "re: one");
  CHECK(replay->complete(make_exchange("decomposition", {{"description", "two"}})).text == "re: two");
  CHECK(replay->exhausted());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(make_backend({"replay", "", "", "X", ""}), ConfigError);
  CHECK_THROWS_AS(make_backend({"carrier-pigeon", "", "", "X", ""}), ConfigError);
}

TEST_CASE("live backend retries transport failures with backoff") {
  ::setenv("OPTISYNTH_TEST_KEY", "secret-token", 1);
  LiveConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.model = "teacher";
  cfg.credential_env = "OPTISYNTH_TEST_KEY";
  auto transport = std::make_unique<FaultyTransport>();
  FaultyTransport &t = *transport;
  t.script = {{0, ""}, {503, "busy"}, {200, completion("hello")}};
  std::vector<long long> sleeps;
  LiveBackend live(cfg, std::move(transport),
                   [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  const ChatReply r = live.complete(make_exchange("decomposition", {{"description", "D"}}));
  CHECK(r.text == "hello");
  CHECK(r.attempts == 3);
  CHECK(sleeps == std::vector<long long>{500, 1000});
  REQUIRE(t.bodies.size() == 3);
  const auto body = nlohmann::json::parse(t.bodies.back());
  CHECK(body["model"] == "teacher");
  CHECK(body["temperature"].get<double>() == 0.7);
  CHECK(body["seed"] == 0);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(t.authorization.back() == "Bearer secret-token");
  CHECK(t.bodies.back().find("secret-token") == std::string::npos);

  t.script = {{0, ""}, {0, ""}, {0, ""}};
  CHECK_THROWS_AS(live.complete(make_exchange("decomposition", {{"description", "D"}})),
                  TransportError);
  t.script = {{401, "denied"}};
  CHECK_THROWS_AS(live.complete(make_exchange("decomposition", {{"description", "D"}})), Error);
  CHECK(t.script.empty());

  ::unsetenv("OPTISYNTH_TEST_KEY");
  CHECK_THROWS_AS(live.complete(make_exchange("decomposition", {{"description", "D"}})),
                  ConfigError);
}

TEST_CASE("repair loop") {
  const Bindings context{{"formulation", "F"}, {"industry", "retail"}, {"q_n_a_sample", "Q"},
                         {"qna_examples", "Q"}, {"description", "D"}};
  const auto covers = [](const std::string &text) {
    std::set<std::string> missing;
    if (text.find("b_1") == std::string::npos)
      missing.insert("b_1");
    return missing;
  };

  std::vector<std::string> prompts;
  FunctionBackend fixer([&](const ChatExchange &ex) {
    prompts.push_back(ex.messages[0].content);
    return std::string("Added it.\n```\nuse at most \\parameter{b_1} hours\n```");
  });
  RepairResult r = repair_loop(fixer, RepairKind::Constraint, context, "old text", {"b_1"}, 3, covers);
  CHECK(r.passed);
  CHECK(r.calls == 1);
  CHECK(r.text == "use at most \\parameter{b_1} hours");
  REQUIRE(prompts.size() == 1);
  CHECK(prompts[0].find("old text") != std::string::npos);
  CHECK(prompts[0].find("\nb_1\n") != std::string::npos);

  FunctionBackend useless([](const ChatExchange &) { return std::string("```\nstill nothing\n```"); });
  r = repair_loop(useless, RepairKind::Description, context, "t", {"b_1"}, 4, covers);
  CHECK_FALSE(r.passed);
  CHECK(r.calls == 4);
  CHECK(useless.calls() == 4);
  CHECK(r.missing == std::set<std::string>{"b_1"});

  FunctionBackend idle([](const ChatExchange &) { return std::string(); });
  r = repair_loop(idle, RepairKind::Variables, context, "t", {}, 2, covers);
  CHECK(r.passed);
  CHECK(r.calls == 0);
  CHECK(idle.calls() == 0);
  CHECK_THROWS_AS(repair_loop(idle, RepairKind::Ranges, context, "t", {"x"}, 0, covers), ConfigError);
  CHECK(repair_prompt(RepairKind::Ranges) == "parameter_range_debugging");
}
