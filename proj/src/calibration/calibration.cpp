#include "forgerykit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"

namespace forgerykit::calibration {

namespace {

using nlohmann::json;

// J scaled by P*N: tp*N - fp*P. Exact in integers, so J comparisons are
// free of rounding ties.
std::int64_t scaled_j(const metrics::RocPoint& p, std::int64_t P, std::int64_t N) {
    return p.tp * N - p.fp * P;
}

}  // namespace

ThresholdCalibration youden_optimal_threshold(std::span<const ScoredSample> scores, std::string_view model_id) {
    const auto roc = metrics::roc_curve(scores);
    const std::int64_t P = roc.positives;
    const std::int64_t N = roc.negatives;

    const metrics::RocPoint* best = nullptr;
    std::int64_t best_j = 0;
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        const auto& p = roc.points[i];
        const std::int64_t j = scaled_j(p, P, N);
        // Points arrive in decreasing threshold order, so on a full tie the
        // later (lower-threshold) point wins.
        if (!best || j > best_j || (j == best_j && p.tp >= best->tp)) {
            best = &p;
            best_j = j;
        }
    }

    ThresholdCalibration cal;
    cal.model_id = std::string(model_id);
    cal.threshold = best->threshold;
    cal.tpr_at_opt = best->tpr;
    cal.fpr_at_opt = best->fpr;
    cal.youden_j = cal.tpr_at_opt - cal.fpr_at_opt;
    cal.calibrated_on = P + N;
    return cal;
}

ThresholdCalibration fixed_threshold(std::span<const ScoredSample> scores, std::string_view model_id,
                                     double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "threshold must lie in [0, 1]");
    }
    const auto cm = metrics::confusion_matrix(scores, threshold);
    if (cm.positives() == 0 || cm.negatives() == 0) {
        throw Error(ErrorKind::SingleClassInput, "calibration needs at least one sample of each class");
    }
    ThresholdCalibration cal;
    cal.model_id = std::string(model_id);
    cal.threshold = threshold;
    cal.tpr_at_opt = cm.tpr();
    cal.fpr_at_opt = cm.fpr();
    cal.youden_j = cal.tpr_at_opt - cal.fpr_at_opt;
    cal.calibrated_on = cm.total();
    return cal;
}

std::vector<int> apply_threshold(std::span<const ScoredSample> scores, const ThresholdCalibration& cal) {
    std::vector<int> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
        out.push_back(s.score >= cal.threshold ? 1 : 0);
    }
    return out;
}

std::string export_scores(std::span<const ScoredSample> scores) {
    std::vector<const ScoredSample*> sorted;
    sorted.reserve(scores.size());
    for (const auto& s : scores) {
        if (s.id.find_first_of(",\"\r\n") != std::string::npos) {
            throw Error(ErrorKind::InvalidArgument, "score id contains a reserved character: " + s.id);
        }
        sorted.push_back(&s);
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
    std::string out = "id,label,score\n";
    for (const auto* s : sorted) {
        out += s->id;
        out += ',';
        out += std::to_string(s->label);
        out += ',';
        out += io::format_real(s->score);
        out += '\n';
    }
    return out;
}

std::vector<ScoredSample> import_scores(std::string_view csv) {
    std::vector<ScoredSample> out;
    std::set<std::string> seen;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (pos < csv.size()) {
        std::size_t end = csv.find('\n', pos);
        if (end == std::string_view::npos) {
            end = csv.size();
        }
        std::string_view line = csv.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const std::string where = "line " + std::to_string(line_no);
        if (!header_seen) {
            if (line != "id,label,score") {
                throw Error(ErrorKind::ParseError, where + ": expected header 'id,label,score'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) {
            if (pos >= csv.size()) {
                break;
            }
            throw Error(ErrorKind::ParseError, where + ": empty row");
        }
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos || c1 == 0) {
            throw Error(ErrorKind::ParseError, where + ": expected 3 fields");
        }
        ScoredSample s;
        s.id = std::string(line.substr(0, c1));
        long long label = 0;
        if (!io::parse_int(line.substr(c1 + 1, c2 - c1 - 1), label)) {
            throw Error(ErrorKind::ParseError, where + ": label is not an integer");
        }
        if (label != 0 && label != 1) {
            throw Error(ErrorKind::RangeError, where + ": label must be 0 or 1");
        }
        s.label = static_cast<int>(label);
        if (!io::parse_real(line.substr(c2 + 1), s.score)) {
            throw Error(ErrorKind::ParseError, where + ": score is not a finite real");
        }
        if (s.score < 0.0 || s.score > 1.0) {
            throw Error(ErrorKind::RangeError, where + ": score outside [0, 1]");
        }
        if (!seen.insert(s.id).second) {
            throw Error(ErrorKind::DuplicateId, where + ": " + s.id);
        }
        out.push_back(std::move(s));
    }
    if (!header_seen) {
        throw Error(ErrorKind::ParseError, "line 1: expected header 'id,label,score'");
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

std::vector<ScoredSample> load_scores(const std::filesystem::path& path) {
    try {
        return import_scores(io::read_text(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void save_scores(std::span<const ScoredSample> scores, const std::filesystem::path& path) {
    io::write_file_atomic(path, export_scores(scores));
}

std::string calibration_to_json(const ThresholdCalibration& cal) {
    std::string out = "{\n";
    out += "  \"model_id\": " + json(cal.model_id).dump() + ",\n";
    out += "  \"threshold\": " + io::format_real(cal.threshold) + ",\n";
    out += "  \"youden_j\": " + io::format_real(cal.youden_j) + ",\n";
    out += "  \"tpr_at_opt\": " + io::format_real(cal.tpr_at_opt) + ",\n";
    out += "  \"fpr_at_opt\": " + io::format_real(cal.fpr_at_opt) + ",\n";
    out += "  \"calibrated_on\": " + std::to_string(cal.calibrated_on) + "\n";
    out += "}\n";
    return out;
}

ThresholdCalibration calibration_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("calibration: ") + e.what());
    }
    ThresholdCalibration cal;
    try {
        cal.model_id = j.at("model_id").get<std::string>();
        cal.threshold = j.at("threshold").get<double>();
        cal.youden_j = j.at("youden_j").get<double>();
        cal.tpr_at_opt = j.at("tpr_at_opt").get<double>();
        cal.fpr_at_opt = j.at("fpr_at_opt").get<double>();
        cal.calibrated_on = j.at("calibrated_on").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("calibration: ") + e.what());
    }
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(cal.threshold) || !unit(cal.tpr_at_opt) || !unit(cal.fpr_at_opt) || cal.calibrated_on < 0) {
        throw Error(ErrorKind::ParseError, "calibration: field out of range");
    }
    if (cal.youden_j != cal.tpr_at_opt - cal.fpr_at_opt) {
        throw Error(ErrorKind::ParseError, "calibration: youden_j != tpr_at_opt - fpr_at_opt");
    }
    return cal;
}

void save_calibration(const ThresholdCalibration& cal, const std::filesystem::path& path) {
    io::write_file_atomic(path, calibration_to_json(cal));
}

ThresholdCalibration load_calibration(const std::filesystem::path& path) {
    try {
        return calibration_from_json(io::read_text(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

}  // namespace forgerykit::calibration
