#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gpta/dataset.hpp"
#include "gpta/metrics.hpp"
#include "gpta/prefix_history.hpp"
#include "gpta/student.hpp"
#include "gpta/ta.hpp"

namespace gpta {

inline constexpr int kDefaultPrefixesPerRound = 8;
inline constexpr int kStallRounds = 10;

struct RoundStats {
  int round = 0;
  int generated = 0;
  // Candidates whose score strictly exceeded the history maximum before the
  // round started.
  int exceeded = 0;

  bool operator==(const RoundStats&) const = default;
};

// Metric of the frozen student on eval_set with `prefix` prepended to every
// input. Throws StateError if the student is not frozen.
double score_prefix(const StudentParams& student, std::string_view prefix, const Dataset& eval_set,
                    MetricKind kind);

// History holding the empty prefix (the no-prefix baseline) plus every
// candidate, all scored against the frozen student.
PrefixHistory seed_history(const StudentParams& student, const Dataset& eval_set, MetricKind kind,
                           std::span<const std::string> candidates,
                           std::size_t capacity = kDefaultHistorySize);

// Re-scores every entry against a new frozen student and re-sorts, keeping
// origins. Ties keep their previous relative order.
PrefixHistory rescore(const PrefixHistory& h, const StudentParams& student,
                      const Dataset& eval_set, MetricKind kind);

// Keeps the `keep` best entries plus the empty prefix, which is never dropped.
PrefixHistory retain_best(const PrefixHistory& h, std::size_t keep);

struct CollectParams {
  MetricKind kind = MetricKind::Accuracy;
  std::size_t k = kDefaultHistorySize;
  int per_round = kDefaultPrefixesPerRound;
  double temperature = kDefaultTemperature;
  // Recorded in the origin of generated entries.
  int epoch = 0;
};

struct CollectResult {
  PrefixHistory history;
  std::vector<RoundStats> rounds;
};

// Grows h0 to exactly k entries by repeatedly asking the TA for candidates,
// scoring the unseen ones and inserting them. Throws StallError after
// kStallRounds consecutive rounds without a new entry.
CollectResult collect(TaClient& client, TaHandle& ta, const MetaPrompt& mp,
                      const StudentParams& student, const Dataset& eval_set, PrefixHistory h0,
                      const CollectParams& params);

}  // namespace gpta
