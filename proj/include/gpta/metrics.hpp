#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpta {

// Every metric is oriented so that larger is better.
enum class MetricKind { Accuracy, MacroF1, NegMeanLoss };

std::string to_string(MetricKind kind);
// Accepts "accuracy", "macro_f1", "neg_loss".
MetricKind parse_metric_kind(std::string_view name);

// Score from hard predictions. class_count <= 0 infers it from the data.
// NegMeanLoss needs probabilities and is rejected here.
double evaluate(MetricKind kind, std::span<const int> predictions, std::span<const int> labels,
                int class_count = 0);

// Score from per-example probability vectors; Accuracy and MacroF1 use the
// argmax (lowest index on ties).
double evaluate(MetricKind kind, std::span<const std::vector<double>> probabilities,
                std::span<const int> labels, int class_count = 0);

}  // namespace gpta
