#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forgerykit/metrics.hpp"
#include "forgerykit/scored_sample.hpp"

namespace forgerykit::calibration {

// Operating point chosen for one model. youden_j == tpr_at_opt - fpr_at_opt.
struct ThresholdCalibration {
    std::string model_id;
    double threshold = 0.5;
    double youden_j = 0.0;
    double tpr_at_opt = 0.0;
    double fpr_at_opt = 0.0;
    std::int64_t calibrated_on = 0;

    friend bool operator==(const ThresholdCalibration&, const ThresholdCalibration&) = default;
};

// Maximizes J = TPR - FPR over the realized score values (ROC vertices).
// Ties on J prefer the higher TPR, then the lower threshold.
ThresholdCalibration youden_optimal_threshold(std::span<const ScoredSample> scores, std::string_view model_id);

// Calibration record for a caller-supplied threshold (no optimization);
// J, TPR and FPR are measured on `scores` at that threshold.
ThresholdCalibration fixed_threshold(std::span<const ScoredSample> scores, std::string_view model_id,
                                     double threshold);

// prediction = 1 iff score >= cal.threshold, in input order.
std::vector<int> apply_threshold(std::span<const ScoredSample> scores, const ThresholdCalibration& cal);

// Score CSV: header `id,label,score`, LF line endings, rows in id order.
// Ids may not contain commas, quotes or line breaks.
std::string export_scores(std::span<const ScoredSample> scores);
std::vector<ScoredSample> import_scores(std::string_view csv);
std::vector<ScoredSample> load_scores(const std::filesystem::path& path);
void save_scores(std::span<const ScoredSample> scores, const std::filesystem::path& path);

std::string calibration_to_json(const ThresholdCalibration& cal);
ThresholdCalibration calibration_from_json(std::string_view text);
void save_calibration(const ThresholdCalibration& cal, const std::filesystem::path& path);
ThresholdCalibration load_calibration(const std::filesystem::path& path);

}  // namespace forgerykit::calibration
