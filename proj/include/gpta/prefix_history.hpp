#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace gpta {

struct Origin {
  enum class Kind { Seed, Generated };
  Kind kind = Kind::Seed;
  int epoch = 0;  // Generated only
  int round = 0;  // Generated only

  static Origin seed() { return {}; }
  static Origin generated(int epoch, int round) { return {Kind::Generated, epoch, round}; }
  bool operator==(const Origin&) const = default;
};

struct ScoredPrefix {
  std::string prefix;
  double score = 0.0;  // higher is better
  Origin origin;

  bool operator==(const ScoredPrefix&) const = default;
};

inline constexpr std::size_t kDefaultHistorySize = 50;

// The prefix/score history H: nondecreasing by score, unique by exact prefix
// string. Ties keep insertion order (newer after older).
class PrefixHistory {
 public:
  explicit PrefixHistory(std::size_t capacity = kDefaultHistorySize) : capacity_(capacity) {}

  const std::vector<ScoredPrefix>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t capacity() const noexcept { return capacity_; }
  void set_capacity(std::size_t k) noexcept { capacity_ = k; }

  bool contains(std::string_view prefix) const;
  const ScoredPrefix* find(std::string_view prefix) const;
  // Highest-scoring entry (the last one). Precondition: non-empty.
  const ScoredPrefix& best() const { return entries_.back(); }
  double max_score() const { return entries_.back().score; }

  // Returns false, leaving the history unchanged, when the prefix is already
  // present. Throws ValidationError on a non-finite score.
  bool insert(ScoredPrefix sp);
  bool erase(std::string_view prefix);

  bool operator==(const PrefixHistory& o) const {
    return capacity_ == o.capacity_ && entries_ == o.entries_;
  }

 private:
  std::size_t capacity_;
  std::vector<ScoredPrefix> entries_;
  std::unordered_set<std::string> index_;
};

// Value-returning form of PrefixHistory::insert.
PrefixHistory insert_sorted(PrefixHistory h, ScoredPrefix sp);

nlohmann::json to_json(const Origin& origin);
Origin origin_from_json(const nlohmann::json& j);
// JSON array of {prefix, score, origin}, ascending.
nlohmann::json to_json(const PrefixHistory& h);
PrefixHistory history_from_json(const nlohmann::json& j, std::size_t capacity);

}  // namespace gpta
