#include "gpta/history.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "gpta/error.hpp"

namespace gpta {

using nlohmann::json;

// ---------------------------------------------------------------------------
// PrefixHistory

bool PrefixHistory::contains(std::string_view prefix) const {
  return index_.count(std::string(prefix)) != 0;
}

const ScoredPrefix* PrefixHistory::find(std::string_view prefix) const {
  if (!contains(prefix)) return nullptr;
  for (const auto& e : entries_) {
    if (e.prefix == prefix) return &e;
  }
  return nullptr;
}

bool PrefixHistory::insert(ScoredPrefix sp) {
  if (!std::isfinite(sp.score)) throw ValidationError("prefix score must be finite");
  if (contains(sp.prefix)) return false;
  // upper_bound places the new entry after any equal scores.
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), sp.score,
                              [](double s, const ScoredPrefix& e) { return s < e.score; });
  index_.insert(sp.prefix);
  entries_.insert(pos, std::move(sp));
  return true;
}

bool PrefixHistory::erase(std::string_view prefix) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const ScoredPrefix& e) { return e.prefix == prefix; });
  if (it == entries_.end()) return false;
  index_.erase(it->prefix);
  entries_.erase(it);
  return true;
}

PrefixHistory insert_sorted(PrefixHistory h, ScoredPrefix sp) {
  h.insert(std::move(sp));
  return h;
}

json to_json(const Origin& origin) {
  if (origin.kind == Origin::Kind::Seed) return json{{"kind", "seed"}};
  return json{{"kind", "generated"}, {"epoch", origin.epoch}, {"round", origin.round}};
}

Origin origin_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "seed") return Origin::seed();
  if (kind == "generated") {
    return Origin::generated(j.at("epoch").get<int>(), j.at("round").get<int>());
  }
  throw ValidationError("unknown prefix origin \"" + kind + "\"");
}

json to_json(const PrefixHistory& h) {
  json arr = json::array();
  for (const auto& e : h.entries()) {
    arr.push_back({{"prefix", e.prefix}, {"score", e.score}, {"origin", to_json(e.origin)}});
  }
  return arr;
}

PrefixHistory history_from_json(const json& j, std::size_t capacity) {
  if (!j.is_array()) throw ParseError("history must be a JSON array");
  PrefixHistory h(capacity);
  double previous = -INFINITY;
  try {
    for (const auto& e : j) {
      ScoredPrefix sp{e.at("prefix").get<std::string>(), e.at("score").get<double>(),
                      origin_from_json(e.at("origin"))};
      if (sp.score < previous) throw ValidationError("history is not in ascending order");
      previous = sp.score;
      if (!h.insert(std::move(sp))) throw ValidationError("history has a duplicate prefix");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("history: ") + e.what());
  }
  return h;
}

// ---------------------------------------------------------------------------
// Scoring and collection

double score_prefix(const StudentParams& student, std::string_view prefix, const Dataset& eval_set,
                    MetricKind kind) {
  if (!student.frozen()) throw StateError("prefixes must be scored against a frozen student");
  if (eval_set.empty()) throw ValidationError("evaluation split is empty");
  std::vector<std::vector<double>> probs;
  std::vector<int> labels;
  probs.reserve(eval_set.size());
  labels.reserve(eval_set.size());
  for (const auto& ex : eval_set.examples) {
    probs.push_back(predict_proba(student, prefix, ex.text));
    labels.push_back(ex.label);
  }
  return evaluate(kind, std::span<const std::vector<double>>(probs), labels,
                  std::max(eval_set.class_count, student.class_count()));
}

namespace {

// Scores are independent of each other, so candidates run concurrently.
std::vector<double> score_all(const StudentParams& student, std::span<const std::string> prefixes,
                              const Dataset& eval_set, MetricKind kind) {
  if (!student.frozen()) throw StateError("prefixes must be scored against a frozen student");
  std::vector<std::future<double>> jobs;
  jobs.reserve(prefixes.size());
  for (const auto& p : prefixes) {
    jobs.push_back(std::async(std::launch::async, [&student, &p, &eval_set, kind] {
      return score_prefix(student, p, eval_set, kind);
    }));
  }
  std::vector<double> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace

PrefixHistory seed_history(const StudentParams& student, const Dataset& eval_set, MetricKind kind,
                           std::span<const std::string> candidates, std::size_t capacity) {
  std::vector<std::string> prefixes{""};
  for (const auto& c : candidates) {
    if (std::find(prefixes.begin(), prefixes.end(), c) == prefixes.end()) prefixes.push_back(c);
  }
  const auto scores = score_all(student, prefixes, eval_set, kind);
  PrefixHistory h(capacity);
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    h.insert({prefixes[i], scores[i], Origin::seed()});
  }
  return h;
}

PrefixHistory rescore(const PrefixHistory& h, const StudentParams& student,
                      const Dataset& eval_set, MetricKind kind) {
  std::vector<std::string> prefixes;
  for (const auto& e : h.entries()) prefixes.push_back(e.prefix);
  const auto scores = score_all(student, prefixes, eval_set, kind);
  std::vector<ScoredPrefix> entries = h.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].score = scores[i];
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ScoredPrefix& a, const ScoredPrefix& b) { return a.score < b.score; });
  PrefixHistory out(h.capacity());
  for (auto& e : entries) out.insert(std::move(e));
  return out;
}

PrefixHistory retain_best(const PrefixHistory& h, std::size_t keep) {
  PrefixHistory out(h.capacity());
  const auto& e = h.entries();
  const std::size_t first = e.size() > keep ? e.size() - keep : 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i >= first || e[i].prefix.empty()) out.insert(e[i]);
  }
  return out;
}

CollectResult collect(TaClient& client, TaHandle& ta, const MetaPrompt& mp,
                      const StudentParams& student, const Dataset& eval_set, PrefixHistory h0,
                      const CollectParams& params) {
  if (h0.empty()) throw ValidationError("collect needs a non-empty initial history");
  if (params.k <= h0.size()) throw ValidationError("collect target k must exceed the history size");
  if (params.per_round < 1) throw ValidationError("prefixes per round must be >= 1");
  if (!student.frozen()) throw StateError("collect needs a frozen student");

  CollectResult result{std::move(h0), {}};
  PrefixHistory& h = result.history;
  h.set_capacity(params.k);
  std::vector<std::string> inserted;  // this call's insertions, oldest first
  int idle_rounds = 0;
  int round = 0;

  while (h.size() < params.k) {
    const double pre_round_max = h.max_score();
    const auto request = render_generation_request(mp, h, params.per_round, params.temperature);
    const auto candidates = client.generate(ta, request);

    std::vector<std::string> fresh;
    for (const auto& c : candidates) {
      if (!h.contains(c) && std::find(fresh.begin(), fresh.end(), c) == fresh.end()) {
        fresh.push_back(c);
      }
    }
    const auto scores = score_all(student, fresh, eval_set, params.kind);

    RoundStats stats{round, static_cast<int>(candidates.size()), 0};
    std::size_t added = 0;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      if (scores[i] > pre_round_max) ++stats.exceeded;
      if (h.insert({fresh[i], scores[i], Origin::generated(params.epoch, round)})) {
        inserted.push_back(fresh[i]);
        ++added;
      }
    }
    result.rounds.push_back(stats);
    ++round;

    if (added == 0) {
      if (++idle_rounds >= kStallRounds) {
        throw StallError("history collection stalled: " + std::to_string(kStallRounds) +
                         " consecutive rounds added no new prefix (history size " +
                         std::to_string(h.size()) + ", target " + std::to_string(params.k) + ")");
      }
    } else {
      idle_rounds = 0;
    }
  }

  // Drop the newest insertions until exactly k remain.
  while (h.size() > params.k) {
    h.erase(inserted.back());
    inserted.pop_back();
  }
  return result;
}

}  // namespace gpta
