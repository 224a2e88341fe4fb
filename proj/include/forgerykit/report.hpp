#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forgerykit/calibration.hpp"
#include "forgerykit/metrics.hpp"

namespace forgerykit::report {

inline constexpr int kReportSchemaVersion = 1;

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct EvaluationReport {
    std::string model_id;
    metrics::MetricsRow metrics;
    metrics::ConfusionMatrix confusion;
    calibration::ThresholdCalibration calibration;
    std::string dataset_digest;  // "sha256:<hex>" of the canonical score CSV
    ConfigEcho config_echo;

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

// Confusion matrix and threshold metrics at cal.threshold, AUC over the
// full score set.
EvaluationReport evaluate(std::span<const ScoredSample> scores, const calibration::ThresholdCalibration& cal,
                          metrics::Averaging averaging, ConfigEcho config_echo = {});

std::string dataset_digest(std::span<const ScoredSample> scores);

// Report JSON: fixed key order, reals at 17 significant digits.
std::string report_to_json(const EvaluationReport& r);
EvaluationReport report_from_json(std::string_view text);
void save_report(const EvaluationReport& r, const std::filesystem::path& path);
EvaluationReport load_report(const std::filesystem::path& path);

// 2x2 grid: rows are actual classes, columns predicted classes.
std::string export_confusion(const metrics::ConfusionMatrix& cm);

enum Column { kAccuracy, kPrecision, kRecall, kF1, kMcc, kAuc, kColumnCount };

struct ComparisonRow {
    std::string model_id;
    metrics::MetricsRow metrics;
    std::array<bool, kColumnCount> best{};  // column maximum (ties all marked)
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;  // sorted by model_id
    double threshold_min = 0.0;
    double threshold_max = 0.0;
};

ComparisonTable compare_models(std::span<const EvaluationReport> reports);

// Column maximum per metric column; `*` marks the argmax. Values at 3 decimals.
std::string render_text(const ComparisonTable& table);
std::string render_csv(const ComparisonTable& table);

}  // namespace forgerykit::report
