#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "gpta/dataset.hpp"
#include "gpta/error.hpp"
#include "gpta/text.hpp"

using namespace gpta;

namespace {

Dataset ten_examples() {
  Dataset d;
  d.class_count = 2;
  for (int i = 0; i < 10; ++i) d.examples.push_back({"text " + std::to_string(i), i % 2});
  return d;
}

// Keyword-count classifier that knows the generator's vocabulary.
int keyword_oracle(const std::string& text, int classes) {
  std::vector<int> hits(static_cast<std::size_t>(classes), 0);
  for (const auto& tok : text::split_whitespace(text)) {
    for (int c = 0; c < classes; ++c) {
      if (tok.rfind("c" + std::to_string(c) + "kw", 0) == 0) ++hits[static_cast<std::size_t>(c)];
    }
  }
  return static_cast<int>(std::max_element(hits.begin(), hits.end()) - hits.begin());
}

double oracle_accuracy(const Dataset& d) {
  int ok = 0;
  for (const auto& ex : d.examples) ok += keyword_oracle(ex.text, d.class_count) == ex.label;
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("parse_jsonl reads labels and an optional class header") {
  const auto d = parse_jsonl(
      "{\"classes\":[\"neg\",\"pos\"]}\n{\"text\":\"bad\",\"label\":0}\n\n{\"text\":\"good\",\"label\":1}\n");
  CHECK(d.size() == 2);
  CHECK(d.class_count == 2);
  CHECK(d.class_names == std::vector<std::string>{"neg", "pos"});
  CHECK(d.examples[1] == TextExample{"good", 1});

  const auto bare = parse_jsonl("{\"text\":\"a\",\"label\":2}\n{\"text\":\"b\",\"label\":0}");
  CHECK(bare.class_count == 3);
  CHECK(bare.class_names.empty());
}

TEST_CASE("parse_jsonl rejects bad input with the line number") {
  CHECK_THROWS_WITH_AS(parse_jsonl(""), doctest::Contains("no examples"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_jsonl("\n\n"), doctest::Contains("no examples"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_jsonl("{\"text\":\"a\",\"label\":0}\n{\"text\":\"b\",\"label\":-1}"),
                       doctest::Contains("line 2"), ValidationError);
  CHECK_THROWS_AS(parse_jsonl("{\"text\":\"\",\"label\":0}"), ValidationError);
  CHECK_THROWS_AS(parse_jsonl("{\"classes\":[\"a\"]}\n{\"text\":\"x\",\"label\":1}"), ValidationError);
  CHECK_THROWS_AS(parse_jsonl("{not json"), ValidationError);
}

TEST_CASE("to_jsonl round-trips") {
  Dataset d = ten_examples();
  d.class_names = {"even", "odd"};
  d.examples[3].text = "quote \" and newline \n inside";
  CHECK(parse_jsonl(to_jsonl(d)) == d);
  d.class_names.clear();
  CHECK(parse_jsonl(to_jsonl(d)) == d);
}

TEST_CASE("split sizes, disjointness and determinism") {
  const Dataset d = ten_examples();
  const Splits s = split(d, {0.8, 0.1, 0.1}, 42);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 1);
  CHECK(s.test.size() == 1);
  std::multiset<std::string> all;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    CHECK(part->class_count == 2);
    for (const auto& ex : part->examples) all.insert(ex.text);
  }
  CHECK(all.size() == 10);
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == 10);

  const Splits again = split(d, {0.8, 0.1, 0.1}, 42);
  CHECK(again.train == s.train);
  CHECK(again.validation == s.validation);
  const Splits other = split(d, {0.8, 0.1, 0.1}, 43);
  CHECK_FALSE(other.train == s.train);
}

TEST_CASE("split rejects degenerate requests") {
  Dataset two = ten_examples();
  two.examples.resize(2);
  CHECK_THROWS_AS(split(two, {0.8, 0.1, 0.1}, 1), ValidationError);
  CHECK_THROWS_AS(split(ten_examples(), {0.8, 0.2, 0.1}, 1), ValidationError);
  CHECK_THROWS_AS(split(ten_examples(), {1.0, 0.0, 0.0}, 1), ValidationError);
}

TEST_CASE("make_exemplars") {
  const Dataset d = ten_examples();
  CHECK(make_exemplars(d, 0, 5).examples.empty());
  const auto a = make_exemplars(d, 4, 5);
  CHECK(a.examples.size() == 4);
  CHECK(a == make_exemplars(d, 4, 5));
  std::set<std::string> texts;
  for (const auto& ex : a.examples) texts.insert(ex.text);
  CHECK(texts.size() == 4);
  CHECK_THROWS_AS(make_exemplars(d, kMaxExemplars + 1, 5), ValidationError);
  CHECK_THROWS_AS(make_exemplars(d, -1, 5), ValidationError);
  Dataset small = d;
  small.examples.resize(3);
  CHECK_THROWS_AS(make_exemplars(small, 4, 5), ValidationError);
}

TEST_CASE("synth_generate shape and separability") {
  SynthParams p;
  p.class_count = 3;
  p.per_class = 50;
  p.seed = 9;
  const Dataset d = synth_generate(p);
  CHECK(d.size() == 150);
  CHECK(d.class_count == 3);
  CHECK(d.class_names == std::vector<std::string>{"class0", "class1", "class2"});
  for (const auto& ex : d.examples) {
    CHECK(text::split_whitespace(ex.text).size() ==
          static_cast<std::size_t>(kSynthKeywordTokens + kSynthNoiseTokens));
  }
  CHECK(oracle_accuracy(d) == 1.0);
  CHECK(synth_keyword(1, 3) == "c1kw3");
}

TEST_CASE("synth_generate noise relabels at the stated rate") {
  SynthParams p;
  p.class_count = 2;
  p.per_class = 1000;
  p.noise = 0.5;
  p.seed = 11;
  // Half the labels are resampled uniformly, half of those land on the true
  // class: expected oracle accuracy 0.75.
  const double acc = oracle_accuracy(synth_generate(p));
  CHECK(std::abs(acc - 0.75) <= 0.05);
}

TEST_CASE("synth_generate is deterministic under its seed") {
  SynthParams p;
  p.seed = 5;
  p.noise = 0.1;
  CHECK(to_jsonl(synth_generate(p)) == to_jsonl(synth_generate(p)));
  SynthParams q = p;
  q.seed = 6;
  CHECK(to_jsonl(synth_generate(p)) != to_jsonl(synth_generate(q)));
  SynthParams bad = p;
  bad.noise = 1.5;
  CHECK_THROWS_AS(synth_generate(bad), ValidationError);
}
