#include "gpta/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "gpta/error.hpp"
#include "gpta/rng.hpp"
#include "gpta/text.hpp"

namespace gpta {

using nlohmann::json;

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

void validate(const Dataset& d) {
  if (d.class_count <= 0) throw ValidationError("class_count must be positive");
  if (!d.class_names.empty() &&
      d.class_names.size() != static_cast<std::size_t>(d.class_count)) {
    throw ValidationError("class_names must have class_count entries");
  }
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    const auto& ex = d.examples[i];
    if (ex.label < 0 || ex.label >= d.class_count) {
      throw ValidationError("example " + std::to_string(i) + ": label " +
                            std::to_string(ex.label) + " out of range");
    }
    if (text::trim(ex.text).empty()) {
      throw ValidationError("example " + std::to_string(i) + ": empty text");
    }
  }
}

Dataset parse_jsonl(std::string_view content) {
  Dataset d;
  bool have_header = false;
  bool seen_example = false;
  int max_label = -1;
  std::vector<std::size_t> line_of;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (text::trim(line).empty()) {
      if (end == content.size()) break;
      continue;
    }

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(at_line(line_no) + e.what());
    }
    if (!obj.is_object()) throw ParseError(at_line(line_no) + "expected a JSON object");

    if (obj.contains("classes") && !obj.contains("text")) {
      if (have_header || seen_example) {
        throw ParseError(at_line(line_no) + "classes header must be the first line");
      }
      const auto& names = obj["classes"];
      if (!names.is_array() || names.empty()) {
        throw ParseError(at_line(line_no) + "\"classes\" must be a non-empty array");
      }
      for (const auto& n : names) {
        if (!n.is_string()) throw ParseError(at_line(line_no) + "class names must be strings");
        d.class_names.push_back(n.get<std::string>());
      }
      d.class_count = static_cast<int>(d.class_names.size());
      have_header = true;
      continue;
    }

    if (!obj.contains("text") || !obj["text"].is_string()) {
      throw ParseError(at_line(line_no) + "missing string field \"text\"");
    }
    if (!obj.contains("label") || !obj["label"].is_number_integer()) {
      throw ParseError(at_line(line_no) + "missing integer field \"label\"");
    }
    const auto label = obj["label"].get<std::int64_t>();
    if (label < 0 || (have_header && label >= d.class_count) || label > INT32_MAX) {
      throw ValidationError(at_line(line_no) + "label " + std::to_string(label) +
                            " out of range");
    }
    auto body = obj["text"].get<std::string>();
    if (text::trim(body).empty()) throw ValidationError(at_line(line_no) + "empty text");
    max_label = std::max(max_label, static_cast<int>(label));
    d.examples.push_back({std::move(body), static_cast<int>(label)});
    line_of.push_back(line_no);
    seen_example = true;
    if (end == content.size()) break;
  }

  if (d.examples.empty()) throw ValidationError("no examples");
  if (!have_header) d.class_count = max_label + 1;
  return d;
}

Dataset load_jsonl(const std::string& path) { return parse_jsonl(text::read_file(path)); }

std::string to_jsonl(const Dataset& d) {
  std::string out;
  if (!d.class_names.empty()) {
    out += json{{"classes", d.class_names}}.dump();
    out += '\n';
  }
  for (const auto& ex : d.examples) {
    nlohmann::ordered_json line = nlohmann::ordered_json::object();
    line["text"] = ex.text;
    line["label"] = ex.label;
    out += line.dump();
    out += '\n';
  }
  return out;
}

void save_jsonl(const Dataset& d, const std::string& path) { text::write_file(path, to_jsonl(d)); }

Splits split(const Dataset& d, std::array<double, 3> fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ValidationError("split fractions must lie in (0,1)");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
  const std::size_t n = d.size();
  if (n < 3) throw ValidationError("split needs at least 3 examples");

  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[0]));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions[1]));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw ValidationError("split would leave an empty partition");
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  Splits out;
  for (Dataset* part : {&out.train, &out.validation, &out.test}) {
    part->class_count = d.class_count;
    part->class_names = d.class_names;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Dataset& part = i < n_train ? out.train : (i < n_train + n_val ? out.validation : out.test);
    part.examples.push_back(d.examples[order[i]]);
  }
  return out;
}

ExemplarSet make_exemplars(const Dataset& train, int count, std::uint64_t seed) {
  if (count < 0 || count > kMaxExemplars) {
    throw ValidationError("exemplar count must be in [0, " + std::to_string(kMaxExemplars) + "]");
  }
  if (static_cast<std::size_t>(count) > train.size()) {
    throw ValidationError("exemplar count exceeds training split size");
  }
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots are the sample.
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  ExemplarSet set;
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    set.examples.push_back(train.examples[order[i]]);
  }
  return set;
}

std::string synth_keyword(int class_index, int j) {
  return "c" + std::to_string(class_index) + "kw" + std::to_string(j);
}

Dataset synth_generate(const SynthParams& p) {
  if (p.class_count < 2) throw ValidationError("synth: class_count must be >= 2");
  if (p.per_class < 1) throw ValidationError("synth: per_class must be >= 1");
  if (p.vocab_size < 1) throw ValidationError("synth: vocab_size must be >= 1");
  if (!(p.noise >= 0.0 && p.noise < 1.0)) throw ValidationError("synth: noise must be in [0,1)");

  Rng rng(p.seed);
  Dataset d;
  d.class_count = p.class_count;
  for (int c = 0; c < p.class_count; ++c) d.class_names.push_back("class" + std::to_string(c));

  for (int i = 0; i < p.per_class; ++i) {
    for (int c = 0; c < p.class_count; ++c) {
      std::vector<std::string> tokens;
      for (int t = 0; t < kSynthKeywordTokens; ++t) {
        tokens.push_back(synth_keyword(c, static_cast<int>(rng.below(kSynthKeywordsPerClass))));
      }
      for (int t = 0; t < kSynthNoiseTokens; ++t) {
        tokens.push_back("w" + std::to_string(rng.below(static_cast<std::uint64_t>(p.vocab_size))));
      }
      rng.shuffle(tokens);
      int label = c;
      if (rng.uniform() < p.noise) label = static_cast<int>(rng.below(p.class_count));
      d.examples.push_back({text::join(tokens, " "), label});
    }
  }
  return d;
}

}  // namespace gpta
