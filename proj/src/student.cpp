#include "gpta/student.hpp"

#include <limits>

#include <algorithm>
#include <cmath>

#include "gpta/error.hpp"
#include "gpta/rng.hpp"
#include "gpta/text.hpp"

namespace gpta {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double FeatureVector::at(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const Feature& f, std::size_t i) { return f.index < i; });
  return (it != entries.end() && it->index == index) ? it->value : 0.0;
}

FeatureVector featurize(std::string_view prefix, std::string_view input, std::size_t dims,
                        std::uint64_t hash_seed) {
  if (dims < 2 || (dims & (dims - 1)) != 0) {
    throw ValidationError("feature dims must be a power of two >= 2");
  }
  const auto prefix_tokens = text::split_whitespace(text::to_lower(prefix));
  const auto input_tokens = text::split_whitespace(text::to_lower(input));
  const std::size_t mask = dims - 1;

  std::vector<std::size_t> hits;
  hits.reserve(prefix_tokens.size() * (input_tokens.size() + 1) + input_tokens.size());
  for (const auto& t : prefix_tokens) hits.push_back(fnv1a64(t, hash_seed) & mask);
  for (const auto& t : input_tokens) hits.push_back(fnv1a64(t, hash_seed) & mask);
  std::string pair;
  for (const auto& p : prefix_tokens) {
    for (const auto& x : input_tokens) {
      pair.assign(p);
      pair.push_back('\x01');
      pair.append(x);
      hits.push_back(fnv1a64(pair, hash_seed) & mask);
    }
  }
  std::sort(hits.begin(), hits.end());

  FeatureVector f;
  f.dims = dims;
  for (std::size_t idx : hits) {
    if (!f.entries.empty() && f.entries.back().index == idx) {
      f.entries.back().value += 1.0;
    } else {
      f.entries.push_back({idx, 1.0});
    }
  }
  return f;
}

StudentParams::StudentParams(std::size_t dims, int class_count, std::uint64_t hash_seed)
    : StudentParams(dims, class_count,
                    std::vector<double>(dims * static_cast<std::size_t>(std::max(class_count, 0))),
                    std::vector<double>(static_cast<std::size_t>(std::max(class_count, 0))),
                    hash_seed) {}

StudentParams::StudentParams(std::size_t dims, int class_count, std::vector<double> weights,
                             std::vector<double> bias, std::uint64_t hash_seed)
    : dims_(dims),
      class_count_(class_count),
      hash_seed_(hash_seed),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (dims_ < 2 || (dims_ & (dims_ - 1)) != 0) {
    throw ValidationError("student dims must be a power of two >= 2");
  }
  if (class_count_ < 1) throw ValidationError("student class_count must be positive");
  const auto c = static_cast<std::size_t>(class_count_);
  if (weights_.size() != c * dims_ || bias_.size() != c) {
    throw ValidationError("student parameter shape mismatch");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weights_.begin(), weights_.end(), finite) ||
      !std::all_of(bias_.begin(), bias_.end(), finite)) {
    throw ValidationError("student parameters must be finite");
  }
}

std::vector<double>& StudentParams::mutable_weights() {
  if (frozen_) throw StateError("student is frozen");
  return weights_;
}

std::vector<double>& StudentParams::mutable_bias() {
  if (frozen_) throw StateError("student is frozen");
  return bias_;
}

std::vector<double> Gradient::dense_weights() const {
  std::vector<double> out(dims * static_cast<std::size_t>(class_count));
  for (const auto& [i, v] : weights) out[i] += v;
  return out;
}

std::vector<double> forward(const StudentParams& params, const FeatureVector& f) {
  const int c = params.class_count();
  std::vector<double> logits(params.bias());
  for (const auto& e : f.entries) {
    if (e.index >= params.dims()) throw ValidationError("feature index out of range");
    for (int k = 0; k < c; ++k) logits[k] += params.weight(k, e.index) * e.value;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logits) v /= z;
  return logits;
}

double loss(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw ValidationError("label out of range");
  }
  // An underflowed probability would make the loss infinite.
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], std::numeric_limits<double>::min()));
}

namespace {

Gradient grad_from_probs(const StudentParams& params, const FeatureVector& f, int label,
                         const std::vector<double>& probs) {
  const int c = params.class_count();
  Gradient g;
  g.dims = params.dims();
  g.class_count = c;
  g.bias.resize(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) g.bias[k] = probs[k] - (k == label ? 1.0 : 0.0);
  g.weights.reserve(static_cast<std::size_t>(c) * f.entries.size());
  for (int k = 0; k < c; ++k) {
    if (g.bias[k] == 0.0) continue;
    for (const auto& e : f.entries) {
      g.weights.emplace_back(static_cast<std::size_t>(k) * g.dims + e.index, g.bias[k] * e.value);
    }
  }
  return g;
}

}  // namespace

Gradient grad(const StudentParams& params, const FeatureVector& f, int label) {
  if (label < 0 || label >= params.class_count()) throw ValidationError("label out of range");
  return grad_from_probs(params, f, label, forward(params, f));
}

void apply_sgd(StudentParams& params, const Gradient& g, double lr) {
  if (params.frozen()) throw StateError("cannot update a frozen student");
  if (g.dims != params.dims() || g.class_count != params.class_count()) {
    throw ValidationError("gradient shape mismatch");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be >= 0");
  auto& w = params.mutable_weights();
  auto& b = params.mutable_bias();
  for (const auto& [i, v] : g.weights) w[i] -= lr * v;
  for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * g.bias[k];
}

StudentParams sgd_step(const StudentParams& params, const Gradient& g, double lr) {
  if (params.frozen()) throw StateError("cannot update a frozen student");
  StudentParams next = params;
  apply_sgd(next, g, lr);
  return next;
}

TrainPassResult train_pass(StudentParams params, const Dataset& train, std::string_view prefix,
                           double lr, std::uint64_t shuffle_seed) {
  if (params.frozen()) throw StateError("cannot train a frozen student");
  if (train.empty()) throw ValidationError("training split is empty");
  if (train.class_count > params.class_count()) {
    throw ValidationError("dataset has more classes than the student");
  }
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(shuffle_seed);
  rng.shuffle(order);

  double total = 0.0;
  for (std::size_t i : order) {
    const auto& ex = train.examples[i];
    const auto f = featurize(prefix, ex.text, params.dims(), params.hash_seed());
    const auto probs = forward(params, f);
    total += loss(probs, ex.label);
    apply_sgd(params, grad_from_probs(params, f, ex.label, probs), lr);
  }
  return {std::move(params), total / static_cast<double>(train.size())};
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<double> predict_proba(const StudentParams& params, std::string_view prefix,
                                  std::string_view input) {
  return forward(params, featurize(prefix, input, params.dims(), params.hash_seed()));
}

int predict(const StudentParams& params, std::string_view prefix, std::string_view input) {
  return argmax(predict_proba(params, prefix, input));
}

json to_json(const StudentParams& params) {
  json j = json::object();
  j["dims"] = params.dims();
  j["class_count"] = params.class_count();
  j["hash_seed"] = params.hash_seed();
  j["bias"] = params.bias();
  j["weights"] = params.weights();
  return j;
}

StudentParams student_from_json(const json& j) {
  try {
    return StudentParams(j.at("dims").get<std::size_t>(), j.at("class_count").get<int>(),
                         j.at("weights").get<std::vector<double>>(),
                         j.at("bias").get<std::vector<double>>(),
                         j.value("hash_seed", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw ParseError(std::string("student checkpoint: ") + e.what());
  }
}

void save_checkpoint(const StudentParams& params, const std::string& path) {
  text::write_file(path, to_json(params).dump() + "\n");
}

StudentParams load_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return student_from_json(j);
}

}  // namespace gpta
