#include <doctest.h>

#include "gpta/dialogue_gradient.hpp"
#include "gpta/error.hpp"
#include "gpta/log.hpp"
#include "gpta/text.hpp"

using namespace gpta;

namespace {

PrefixHistory history_of(std::size_t n) {
  PrefixHistory h(n);
  h.insert({"", 0.0, Origin::seed()});
  for (std::size_t i = 1; i < n; ++i) {
    h.insert({"prefix " + std::to_string(i), static_cast<double>(i) / 100.0, Origin::generated(0, 1)});
  }
  return h;
}

MetaPrompt meta() {
  MetaPrompt mp;
  mp.instruction = "Write prefixes.";
  mp.description = {"toy", "Sort reviews.", {"bad", "good"}};
  return mp;
}

FinetuneExample example(const std::string& target) {
  return {{{Role::System, "sys"}, {Role::User, "user"}, {Role::Assistant, target}}};
}

}  // namespace

TEST_CASE("window counts") {
  CHECK(build_windows(history_of(7), 5).size() == 2);
  CHECK(build_windows(history_of(50), 5).size() == 45);
  CHECK(build_windows(history_of(6), 5).size() == 1);
  CHECK_THROWS_AS(build_windows(history_of(5), 5), ValidationError);
  CHECK_THROWS_AS(build_windows(history_of(5), 0), ValidationError);
}

TEST_CASE("windows slide by one and target the next entry") {
  const auto h = history_of(7);
  const auto g = build_windows(h, 5);
  CHECK(g[0].window.front().prefix.empty());
  CHECK(g[0].target == "prefix 5");
  CHECK(g[1].window.front().prefix == "prefix 1");
  CHECK(g[1].target == "prefix 6");
  CHECK(g[1].target_score == doctest::Approx(0.06));
  CHECK(g[1].index == 1);
}

TEST_CASE("enrich builds system/user/assistant triples") {
  const auto g = build_windows(history_of(8), 5);
  const auto ex = enrich(g, meta());
  REQUIRE(ex.size() == 3);
  for (const auto& e : ex) {
    REQUIRE(e.messages.size() == 3);
    CHECK(e.messages[0] == ChatMessage{Role::System, render_system_message(meta())});
    CHECK(e.messages[1].role == Role::User);
    CHECK(e.messages[2].role == Role::Assistant);
  }
  CHECK(ex[0].messages[2].content == "prefix 5");
  CHECK(ex[2].messages[1].content == render_history_message(g[2].window, 1));
}

TEST_CASE("enrich skips an empty target") {
  PrefixHistory h(4);
  h.insert({"a", 0.1, Origin::seed()});
  h.insert({"b", 0.2, Origin::seed()});
  h.insert({"", 0.3, Origin::seed()});
  h.insert({"c", 0.4, Origin::seed()});
  const auto ex = enrich(build_windows(h, 1), meta());
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].messages[2].content == "b");
  CHECK(ex[1].messages[2].content == "c");
}

TEST_CASE("cap keeps the newest examples and warns past the threshold") {
  std::vector<FinetuneExample> v;
  for (int i = 0; i < 10; ++i) v.push_back(example("t" + std::to_string(i)));
  const auto c = cap(v, 3);
  REQUIRE(c.size() == 3);
  CHECK(c[0].messages[2].content == "t7");
  CHECK(c[2].messages[2].content == "t9");
  CHECK(cap(v, 50).size() == 10);

  std::vector<std::string> warnings;
  auto prev = log::set_sink([&](log::Level lvl, const std::string& m) {
    if (lvl == log::Level::Warn) warnings.push_back(m);
  });
  (void)cap(v, kFinetuneDegradationThreshold);
  CHECK(warnings.empty());
  (void)cap(v, kFinetuneDegradationThreshold + 1);
  log::set_sink(prev);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("150") != std::string::npos);
  CHECK_THROWS_AS(cap(v, 0), ValidationError);
}

TEST_CASE("serialize_jsonl layout and escaping") {
  const std::vector<FinetuneExample> v = {example("line\nbreak \"quoted\"")};
  const std::string s = serialize_jsonl(v);
  CHECK(s ==
        "{\"messages\":[{\"role\":\"system\",\"content\":\"sys\"},{\"role\":\"user\",\"content\":\"user\"},"
        "{\"role\":\"assistant\",\"content\":\"line\\nbreak \\\"quoted\\\"\"}]}\n");
  CHECK(parse_finetune_jsonl(s) == v);
  CHECK_THROWS_AS(serialize_jsonl(std::vector<FinetuneExample>{}), ValidationError);
}

TEST_CASE("golden fixture round trip") {
  const std::string golden = text::read_file(std::string(GPTA_TEST_DATA_DIR) + "/golden/three_gradients.jsonl");
  const auto parsed = parse_finetune_jsonl(golden);
  CHECK(parsed.size() == 3);
  CHECK(serialize_jsonl(parsed) == golden);
  CHECK(parsed[2].messages[2].content == "Read every word → then decide");
}

TEST_CASE("parse_finetune_jsonl is strict") {
  const std::string ok = serialize_jsonl(std::vector<FinetuneExample>{example("a")});
  CHECK_NOTHROW(parse_finetune_jsonl(ok));
  CHECK_THROWS_AS(parse_finetune_jsonl("{\"messages\":[]}\n"), ValidationError);
  CHECK_THROWS_AS(parse_finetune_jsonl(
                      "{\"messages\":[{\"role\":\"user\",\"content\":\"u\"},{\"role\":\"system\",\"content\":\"s\"},"
                      "{\"role\":\"assistant\",\"content\":\"a\"}]}\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_finetune_jsonl(
                      "{\"messages\":[{\"role\":\"system\",\"content\":\"s\"},{\"role\":\"user\",\"content\":\"u\"},"
                      "{\"role\":\"assistant\",\"content\":\"\"}]}\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_finetune_jsonl("garbage\n"), ValidationError);
  CHECK_THROWS_AS(parse_finetune_jsonl(""), ValidationError);
}
