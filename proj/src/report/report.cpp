#include "forgerykit/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"

namespace forgerykit::report {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<const char*, kColumnCount> kColumnNames = {"accuracy", "precision", "recall", "f1", "mcc", "auc"};

double column(const metrics::MetricsRow& m, int c) {
    switch (c) {
    case kAccuracy: return m.accuracy;
    case kPrecision: return m.precision;
    case kRecall: return m.recall;
    case kF1: return m.f1;
    case kMcc: return m.mcc;
    case kAuc: return m.auc;
    default: return 0.0;
    }
}

double get_real(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number()) {
        throw Error(ErrorKind::ParseError, std::string("report: ") + key + " is not a number");
    }
    return v.get<double>();
}

void check_range(double v, double lo, double hi, const char* what) {
    if (!(v >= lo && v <= hi)) {
        throw Error(ErrorKind::RangeError, std::string("report: ") + what + " out of range");
    }
}

}  // namespace

std::string dataset_digest(std::span<const ScoredSample> scores) {
    return "sha256:" + io::sha256_hex(calibration::export_scores(scores));
}

EvaluationReport evaluate(std::span<const ScoredSample> scores, const calibration::ThresholdCalibration& cal,
                          metrics::Averaging averaging, ConfigEcho config_echo) {
    EvaluationReport r;
    r.model_id = cal.model_id;
    r.calibration = cal;
    r.confusion = metrics::confusion_matrix(scores, cal.threshold);
    const auto basic = metrics::basic_metrics(r.confusion, averaging);
    r.metrics.accuracy = basic.accuracy;
    r.metrics.precision = basic.precision;
    r.metrics.recall = basic.recall;
    r.metrics.f1 = basic.f1;
    r.metrics.mcc = metrics::mcc(r.confusion);
    r.metrics.auc = metrics::auc(metrics::roc_curve(scores));
    r.metrics.threshold = cal.threshold;
    r.metrics.averaging = averaging;
    r.dataset_digest = dataset_digest(scores);
    r.config_echo = std::move(config_echo);
    return r;
}

std::string report_to_json(const EvaluationReport& r) {
    const auto real = [](double v) { return io::format_real(v); };
    std::ostringstream o;
    o << "{\n";
    o << "  \"schema_version\": " << kReportSchemaVersion << ",\n";
    o << "  \"model_id\": " << json(r.model_id).dump() << ",\n";
    o << "  \"metrics\": {\n";
    o << "    \"accuracy\": " << real(r.metrics.accuracy) << ",\n";
    o << "    \"precision\": " << real(r.metrics.precision) << ",\n";
    o << "    \"recall\": " << real(r.metrics.recall) << ",\n";
    o << "    \"f1\": " << real(r.metrics.f1) << ",\n";
    o << "    \"mcc\": " << real(r.metrics.mcc) << ",\n";
    o << "    \"auc\": " << real(r.metrics.auc) << ",\n";
    o << "    \"threshold\": " << real(r.metrics.threshold) << ",\n";
    o << "    \"averaging\": \"" << metrics::to_string(r.metrics.averaging) << "\"\n";
    o << "  },\n";
    o << "  \"confusion\": {\"tp\": " << r.confusion.tp << ", \"fp\": " << r.confusion.fp
      << ", \"tn\": " << r.confusion.tn << ", \"fn\": " << r.confusion.fn << "},\n";
    o << "  \"calibration\": {\n";
    o << "    \"model_id\": " << json(r.calibration.model_id).dump() << ",\n";
    o << "    \"threshold\": " << real(r.calibration.threshold) << ",\n";
    o << "    \"youden_j\": " << real(r.calibration.youden_j) << ",\n";
    o << "    \"tpr_at_opt\": " << real(r.calibration.tpr_at_opt) << ",\n";
    o << "    \"fpr_at_opt\": " << real(r.calibration.fpr_at_opt) << ",\n";
    o << "    \"calibrated_on\": " << r.calibration.calibrated_on << "\n";
    o << "  },\n";
    o << "  \"dataset_digest\": " << json(r.dataset_digest).dump() << ",\n";
    o << "  \"config_echo\": {";
    for (std::size_t i = 0; i < r.config_echo.size(); ++i) {
        o << (i ? ",\n" : "\n") << "    " << json(r.config_echo[i].first).dump() << ": "
          << json(r.config_echo[i].second).dump();
    }
    o << (r.config_echo.empty() ? "}\n" : "\n  }\n");
    o << "}\n";
    return o.str();
}

EvaluationReport report_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("report: ") + e.what());
    }
    EvaluationReport r;
    try {
        if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw Error(ErrorKind::ParseError, "report: unsupported schema_version");
        }
        r.model_id = j.at("model_id").get<std::string>();
        const auto& m = j.at("metrics");
        r.metrics.accuracy = get_real(m, "accuracy");
        r.metrics.precision = get_real(m, "precision");
        r.metrics.recall = get_real(m, "recall");
        r.metrics.f1 = get_real(m, "f1");
        r.metrics.mcc = get_real(m, "mcc");
        r.metrics.auc = get_real(m, "auc");
        r.metrics.threshold = get_real(m, "threshold");
        r.metrics.averaging = metrics::parse_averaging(m.at("averaging").get<std::string>());
        const auto& c = j.at("confusion");
        r.confusion = {c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(), c.at("tn").get<std::int64_t>(),
                       c.at("fn").get<std::int64_t>()};
        r.calibration = calibration::calibration_from_json(j.at("calibration").dump());
        r.dataset_digest = j.at("dataset_digest").get<std::string>();
        for (const auto& [k, v] : j.at("config_echo").items()) {
            r.config_echo.emplace_back(k, v.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("report: ") + e.what());
    }
    for (double v : {r.metrics.accuracy, r.metrics.precision, r.metrics.recall, r.metrics.f1, r.metrics.auc}) {
        check_range(v, 0.0, 1.0, "metric");
    }
    check_range(r.metrics.mcc, -1.0, 1.0, "mcc");
    if (r.confusion.tp < 0 || r.confusion.fp < 0 || r.confusion.tn < 0 || r.confusion.fn < 0) {
        throw Error(ErrorKind::RangeError, "report: negative confusion count");
    }
    if (r.metrics.threshold != r.calibration.threshold) {
        throw Error(ErrorKind::ParseError, "report: metrics.threshold differs from calibration.threshold");
    }
    return r;
}

void save_report(const EvaluationReport& r, const std::filesystem::path& path) {
    io::write_file_atomic(path, report_to_json(r));
}

EvaluationReport load_report(const std::filesystem::path& path) {
    try {
        return report_from_json(io::read_text(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string export_confusion(const metrics::ConfusionMatrix& cm) {
    std::string out = ",predicted_authentic,predicted_tampered\n";
    out += "actual_authentic," + std::to_string(cm.tn) + "," + std::to_string(cm.fp) + "\n";
    out += "actual_tampered," + std::to_string(cm.fn) + "," + std::to_string(cm.tp) + "\n";
    return out;
}

ComparisonTable compare_models(std::span<const EvaluationReport> reports) {
    ComparisonTable t;
    if (reports.empty()) {
        return t;
    }
    for (const auto& r : reports) {
        t.rows.push_back({r.model_id, r.metrics, {}});
    }
    std::stable_sort(t.rows.begin(), t.rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) { return a.model_id < b.model_id; });
    for (int c = 0; c < kColumnCount; ++c) {
        double best = column(t.rows.front().metrics, c);
        for (const auto& row : t.rows) {
            best = std::max(best, column(row.metrics, c));
        }
        for (auto& row : t.rows) {
            row.best[static_cast<std::size_t>(c)] = column(row.metrics, c) == best;
        }
    }
    t.threshold_min = t.threshold_max = t.rows.front().metrics.threshold;
    for (const auto& row : t.rows) {
        t.threshold_min = std::min(t.threshold_min, row.metrics.threshold);
        t.threshold_max = std::max(t.threshold_max, row.metrics.threshold);
    }
    return t;
}

std::string render_text(const ComparisonTable& table) {
    std::size_t id_width = 5;
    for (const auto& row : table.rows) {
        id_width = std::max(id_width, row.model_id.size());
    }
    std::ostringstream o;
    o << std::left << std::setw(static_cast<int>(id_width)) << "model";
    for (const char* name : kColumnNames) {
        o << "  " << std::setw(10) << name;
    }
    o << "  threshold\n";
    for (const auto& row : table.rows) {
        o << std::left << std::setw(static_cast<int>(id_width)) << row.model_id;
        for (int c = 0; c < kColumnCount; ++c) {
            std::string cell = io::format_fixed(column(row.metrics, c), 3);
            if (row.best[static_cast<std::size_t>(c)]) {
                cell += '*';
            }
            o << "  " << std::setw(10) << cell;
        }
        o << "  " << io::format_fixed(row.metrics.threshold, 3) << "\n";
    }
    if (!table.rows.empty()) {
        o << "threshold range: [" << io::format_fixed(table.threshold_min, 3) << ", "
          << io::format_fixed(table.threshold_max, 3) << "]\n";
    }
    o << "* = column maximum\n";
    return o.str();
}

std::string render_csv(const ComparisonTable& table) {
    std::string out = "model_id";
    for (const char* name : kColumnNames) {
        out += std::string(",") + name;
    }
    out += ",threshold";
    for (const char* name : kColumnNames) {
        out += std::string(",best_") + name;
    }
    out += '\n';
    for (const auto& row : table.rows) {
        out += row.model_id;
        for (int c = 0; c < kColumnCount; ++c) {
            out += ',' + io::format_real(column(row.metrics, c));
        }
        out += ',' + io::format_real(row.metrics.threshold);
        for (bool b : row.best) {
            out += b ? ",1" : ",0";
        }
        out += '\n';
    }
    return out;
}

}  // namespace forgerykit::report
