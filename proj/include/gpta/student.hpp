#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpta/dataset.hpp"

namespace gpta {

inline constexpr std::size_t kDefaultDims = std::size_t{1} << 18;
inline constexpr double kDefaultStudentLr = 0.1;

// FNV-1a 64-bit. A non-zero seed is XORed into the offset basis; seed 0 is
// the standard hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

struct Feature {
  std::size_t index = 0;
  double value = 0.0;

  bool operator==(const Feature&) const = default;
};

// Sparse feature map: indices strictly increasing, no zero entries.
struct FeatureVector {
  std::size_t dims = 0;
  std::vector<Feature> entries;

  bool empty() const noexcept { return entries.empty(); }
  double at(std::size_t index) const;
  bool operator==(const FeatureVector&) const = default;
};

// Hashed unigram counts over the token stream `prefix ++ text`, plus one
// interaction feature per (prefix token, text token) pair, hashed as
// "<prefix token>\x01<text token>". Tokens are lowercased and split on ASCII
// whitespace. dims must be a power of two >= 2.
FeatureVector featurize(std::string_view prefix, std::string_view text, std::size_t dims,
                        std::uint64_t hash_seed);

// Multiclass linear model f(x) = softmax(W x + b). Weights are row-major
// class_count x dims.
class StudentParams {
 public:
  StudentParams() = default;
  // Zero-initialized parameters.
  StudentParams(std::size_t dims, int class_count, std::uint64_t hash_seed = 0);
  StudentParams(std::size_t dims, int class_count, std::vector<double> weights,
                std::vector<double> bias, std::uint64_t hash_seed = 0);

  std::size_t dims() const noexcept { return dims_; }
  int class_count() const noexcept { return class_count_; }
  // Seed of the feature hash; part of the model since it fixes the feature map.
  std::uint64_t hash_seed() const noexcept { return hash_seed_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  double weight(int cls, std::size_t index) const { return weights_[row(cls) + index]; }

  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }
  void unfreeze() noexcept { frozen_ = false; }

  // Mutable access; throws StateError when frozen.
  std::vector<double>& mutable_weights();
  std::vector<double>& mutable_bias();

  bool operator==(const StudentParams&) const = default;

 private:
  std::size_t row(int cls) const { return static_cast<std::size_t>(cls) * dims_; }

  std::size_t dims_ = 0;
  int class_count_ = 0;
  std::uint64_t hash_seed_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
  bool frozen_ = false;
};

// Gradient of the loss w.r.t. (W, b). Weight entries are sparse over the
// row-major flat index class * dims + feature; indices strictly increasing.
struct Gradient {
  std::size_t dims = 0;
  int class_count = 0;
  std::vector<std::pair<std::size_t, double>> weights;
  std::vector<double> bias;

  std::vector<double> dense_weights() const;
};

std::vector<double> forward(const StudentParams& params, const FeatureVector& f);
double loss(std::span<const double> probs, int label);
Gradient grad(const StudentParams& params, const FeatureVector& f, int label);

// theta - lr * g, returned as a new value. Throws StateError when frozen.
StudentParams sgd_step(const StudentParams& params, const Gradient& g, double lr);
// In-place variant used by the training loop.
void apply_sgd(StudentParams& params, const Gradient& g, double lr);

struct TrainPassResult {
  StudentParams params;
  double mean_loss = 0.0;
};

// One shuffled pass of per-example SGD on featurize(prefix, x). mean_loss is
// the mean of the pre-update losses.
TrainPassResult train_pass(StudentParams params, const Dataset& train, std::string_view prefix,
                           double lr, std::uint64_t shuffle_seed);

// argmax of the class probabilities; ties go to the lowest index.
int predict(const StudentParams& params, std::string_view prefix, std::string_view text);
// Class probabilities for one prefixed input.
std::vector<double> predict_proba(const StudentParams& params, std::string_view prefix,
                                  std::string_view text);
int argmax(std::span<const double> values);

// Checkpoint JSON: {"dims", "class_count", "hash_seed", "bias", "weights"}
// with weights row-major. Loaded parameters are unfrozen.
nlohmann::json to_json(const StudentParams& params);
StudentParams student_from_json(const nlohmann::json& j);
void save_checkpoint(const StudentParams& params, const std::string& path);
StudentParams load_checkpoint(const std::string& path);

}  // namespace gpta
