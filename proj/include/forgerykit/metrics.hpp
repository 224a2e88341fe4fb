#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forgerykit/scored_sample.hpp"

namespace forgerykit::metrics {

// Positive class = Tampered.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const noexcept { return tp + fp + tn + fn; }
    std::int64_t positives() const noexcept { return tp + fn; }
    std::int64_t negatives() const noexcept { return tn + fp; }
    double tpr() const noexcept;
    double fpr() const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class Averaging { Binary, Macro, Weighted };

std::string_view to_string(Averaging a) noexcept;
Averaging parse_averaging(std::string_view text);

struct BasicMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsRow {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mcc = 0.0;
    double auc = 0.0;
    double threshold = 0.0;
    Averaging averaging = Averaging::Weighted;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct RocPoint {
    double threshold = 0.0;  // +inf for the leading sentinel
    double fpr = 0.0;
    double tpr = 0.0;
    std::int64_t fp = 0;
    std::int64_t tp = 0;

    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::int64_t positives = 0;
    std::int64_t negatives = 0;
};

// Predicted Tampered iff score >= threshold.
ConfusionMatrix confusion_matrix(std::span<const ScoredSample> scores, double threshold);
ConfusionMatrix confusion_matrix(std::span<const int> labels, std::span<const int> predictions);

// Per-class values with a zero denominator are defined as 0.
BasicMetrics basic_metrics(const ConfusionMatrix& cm, Averaging averaging);

// 0 when any marginal is zero.
double mcc(const ConfusionMatrix& cm);

// One point per distinct score, swept from the highest score down, after a
// leading (+inf, 0, 0) sentinel.
RocCurve roc_curve(std::span<const ScoredSample> scores);

// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

// CSV with header `threshold,fpr,tpr`; the sentinel is written as `inf`.
std::string roc_to_csv(const RocCurve& curve);

}  // namespace forgerykit::metrics
