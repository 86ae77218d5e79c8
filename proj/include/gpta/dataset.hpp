#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gpta {

struct TextExample {
  std::string text;
  int label = 0;

  bool operator==(const TextExample&) const = default;
};

struct Dataset {
  std::vector<TextExample> examples;
  int class_count = 0;
  // Either empty or exactly class_count names.
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  bool operator==(const Dataset&) const = default;
};

// The dataset description `d` handed to the TA.
struct DatasetDescription {
  std::string name;
  std::string task_summary;
  std::vector<std::string> label_semantics;  // one line per class

  bool operator==(const DatasetDescription&) const = default;
};

// Few-shot exemplars `E`, drawn from the training split. May be empty.
struct ExemplarSet {
  std::vector<TextExample> examples;

  bool operator==(const ExemplarSet&) const = default;
};

inline constexpr int kMaxExemplars = 8;

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

struct SynthParams {
  int class_count = 2;
  int per_class = 100;
  int vocab_size = 200;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

// Checks every dataset invariant; throws ValidationError.
void validate(const Dataset& d);

// Parses JSONL text. Blank lines are skipped; an optional first line
// {"classes":[...]} fixes class_count and class_names.
Dataset parse_jsonl(std::string_view content);
Dataset load_jsonl(const std::string& path);
std::string to_jsonl(const Dataset& d);
void save_jsonl(const Dataset& d, const std::string& path);

// Deterministic shuffle under `seed`, then contiguous slicing.
Splits split(const Dataset& d, std::array<double, 3> fractions, std::uint64_t seed);

ExemplarSet make_exemplars(const Dataset& train, int count, std::uint64_t seed);

// Planted-keyword corpus. Class c owns the keywords "c<c>kw<j>"; shared
// noise tokens are "w<j>" for j < vocab_size.
Dataset synth_generate(const SynthParams& params);

// Name of the j-th planted keyword of class c.
std::string synth_keyword(int class_index, int j);
inline constexpr int kSynthKeywordsPerClass = 8;
inline constexpr int kSynthKeywordTokens = 4;
inline constexpr int kSynthNoiseTokens = 6;

}  // namespace gpta
