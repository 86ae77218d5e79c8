#include "gpta/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gpta/error.hpp"
#include "gpta/student.hpp"

namespace gpta {

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Accuracy: return "accuracy";
    case MetricKind::MacroF1: return "macro_f1";
    case MetricKind::NegMeanLoss: return "neg_loss";
  }
  return "accuracy";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "accuracy") return MetricKind::Accuracy;
  if (name == "macro_f1") return MetricKind::MacroF1;
  if (name == "neg_loss") return MetricKind::NegMeanLoss;
  throw ValidationError("unknown metric \"" + std::string(name) +
                        "\" (expected accuracy, macro_f1 or neg_loss)");
}

namespace {

void check_lengths(std::size_t n_pred, std::size_t n_labels) {
  if (n_pred != n_labels) throw ValidationError("predictions and labels differ in length");
  if (n_pred == 0) throw ValidationError("cannot evaluate an empty set");
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels, int class_count) {
  if (class_count <= 0) {
    int mx = 0;
    for (int v : predictions) mx = std::max(mx, v);
    for (int v : labels) mx = std::max(mx, v);
    class_count = mx + 1;
  }
  const auto c = static_cast<std::size_t>(class_count);
  std::vector<double> tp(c), fp(c), fn(c);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if (p < 0 || p >= class_count || y < 0 || y >= class_count) {
      throw ValidationError("class index out of range");
    }
    if (p == y) {
      tp[static_cast<std::size_t>(y)] += 1;
    } else {
      fp[static_cast<std::size_t>(p)] += 1;
      fn[static_cast<std::size_t>(y)] += 1;
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double denom = 2 * tp[k] + fp[k] + fn[k];
    sum += denom > 0 ? 2 * tp[k] / denom : 0.0;
  }
  return sum / static_cast<double>(c);
}

}  // namespace

double evaluate(MetricKind kind, std::span<const int> predictions, std::span<const int> labels,
                int class_count) {
  check_lengths(predictions.size(), labels.size());
  switch (kind) {
    case MetricKind::Accuracy: {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
      return static_cast<double>(hits) / static_cast<double>(labels.size());
    }
    case MetricKind::MacroF1:
      return macro_f1(predictions, labels, class_count);
    case MetricKind::NegMeanLoss:
      throw ValidationError("neg_loss requires probability vectors");
  }
  return 0.0;
}

double evaluate(MetricKind kind, std::span<const std::vector<double>> probabilities,
                std::span<const int> labels, int class_count) {
  check_lengths(probabilities.size(), labels.size());
  if (kind == MetricKind::NegMeanLoss) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) total += loss(probabilities[i], labels[i]);
    return -total / static_cast<double>(labels.size());
  }
  std::vector<int> predictions;
  predictions.reserve(probabilities.size());
  for (const auto& p : probabilities) predictions.push_back(argmax(p));
  return evaluate(kind, std::span<const int>(predictions), labels, class_count);
}

}  // namespace gpta
