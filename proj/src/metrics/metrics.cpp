#include "forgerykit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"

namespace forgerykit::metrics {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) {
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

struct ClassStats {
    std::int64_t hit;        // correctly predicted members of the class
    std::int64_t predicted;  // samples predicted as the class
    std::int64_t support;    // samples truly in the class
};

}  // namespace

double ConfusionMatrix::tpr() const noexcept { return ratio(tp, positives()); }
double ConfusionMatrix::fpr() const noexcept { return ratio(fp, negatives()); }

std::string_view to_string(Averaging a) noexcept {
    switch (a) {
    case Averaging::Binary: return "binary";
    case Averaging::Macro: return "macro";
    case Averaging::Weighted: return "weighted";
    }
    return "weighted";
}

Averaging parse_averaging(std::string_view text) {
    if (text == "binary") return Averaging::Binary;
    if (text == "macro") return Averaging::Macro;
    if (text == "weighted") return Averaging::Weighted;
    throw Error(ErrorKind::InvalidArgument, "averaging must be binary|macro|weighted, got '" + std::string(text) + "'");
}

ConfusionMatrix confusion_matrix(std::span<const ScoredSample> scores, double threshold) {
    if (scores.empty()) {
        throw Error(ErrorKind::EmptyInput, "confusion matrix of an empty score list");
    }
    ConfusionMatrix cm;
    for (const auto& s : scores) {
        const bool predicted = s.score >= threshold;
        if (s.label == 1) {
            predicted ? ++cm.tp : ++cm.fn;
        } else {
            predicted ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

ConfusionMatrix confusion_matrix(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.size() != predictions.size()) {
        throw Error(ErrorKind::LengthMismatch, "labels and predictions differ in length");
    }
    if (labels.empty()) {
        throw Error(ErrorKind::EmptyInput, "confusion matrix of an empty list");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool predicted = predictions[i] == 1;
        if (labels[i] == 1) {
            predicted ? ++cm.tp : ++cm.fn;
        } else {
            predicted ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

BasicMetrics basic_metrics(const ConfusionMatrix& cm, Averaging averaging) {
    const std::int64_t n = cm.total();
    if (n <= 0) {
        throw Error(ErrorKind::EmptyInput, "metrics of an empty confusion matrix");
    }
    BasicMetrics out;
    out.accuracy = ratio(cm.tp + cm.tn, n);

    const ClassStats pos{cm.tp, cm.tp + cm.fp, cm.tp + cm.fn};
    const ClassStats neg{cm.tn, cm.tn + cm.fn, cm.tn + cm.fp};

    if (averaging == Averaging::Binary) {
        out.precision = ratio(pos.hit, pos.predicted);
        out.recall = ratio(pos.hit, pos.support);
        out.f1 = f1_of(out.precision, out.recall);
        return out;
    }

    const ClassStats classes[2] = {neg, pos};
    double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
    for (const auto& c : classes) {
        const double p = ratio(c.hit, c.predicted);
        const double r = ratio(c.hit, c.support);
        const double f = f1_of(p, r);
        if (averaging == Averaging::Macro) {
            p_sum += p;
            r_sum += r;
            f_sum += f;
        } else {
            // support * num / den keeps the recall term an exact integer
            // (support == den), so weighted recall equals accuracy bit for bit.
            const auto w = static_cast<double>(c.support);
            p_sum += c.predicted == 0 ? 0.0 : w * static_cast<double>(c.hit) / static_cast<double>(c.predicted);
            r_sum += c.support == 0 ? 0.0 : w * static_cast<double>(c.hit) / static_cast<double>(c.support);
            f_sum += w * f;
        }
    }
    const double denom = averaging == Averaging::Macro ? 2.0 : static_cast<double>(n);
    out.precision = p_sum / denom;
    out.recall = r_sum / denom;
    out.f1 = f_sum / denom;
    return out;
}

double mcc(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) {
        throw Error(ErrorKind::EmptyInput, "MCC of an empty confusion matrix");
    }
    const auto tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const auto tn = static_cast<double>(cm.tn), fn = static_cast<double>(cm.fn);
    const double a = tp + fp, b = tn + fn, c = tp + fn, d = tn + fp;
    if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
        return 0.0;
    }
    // Pairing the marginals as (a*b)(c*d) makes the result exactly odd under
    // swapping predicted labels, which exchanges a<->b and c<->d.
    const double num = tp * tn - fp * fn;
    const double den = std::sqrt(a * b) * std::sqrt(c * d);
    return std::clamp(num / den, -1.0, 1.0);
}

RocCurve roc_curve(std::span<const ScoredSample> scores) {
    RocCurve curve;
    for (const auto& s : scores) {
        s.label == 1 ? ++curve.positives : ++curve.negatives;
    }
    if (curve.positives == 0 || curve.negatives == 0) {
        throw Error(ErrorKind::SingleClassInput, "ROC needs at least one sample of each class");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return scores[i].score > scores[j].score; });

    const auto P = static_cast<double>(curve.positives);
    const auto N = static_cast<double>(curve.negatives);
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0, 0, 0});
    std::int64_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double t = scores[order[k]].score;
        while (k < order.size() && scores[order[k]].score == t) {
            scores[order[k]].label == 1 ? ++tp : ++fp;
            ++k;
        }
        curve.points.push_back({t, static_cast<double>(fp) / N, static_cast<double>(tp) / P, fp, tp});
    }
    return curve;
}

double auc(const RocCurve& curve) {
    if (curve.points.size() < 2 || curve.positives == 0 || curve.negatives == 0) {
        throw Error(ErrorKind::InvalidArgument, "AUC needs a non-degenerate ROC curve");
    }
    // Trapezoids over integer counts, scaled once at the end:
    // sum (fp_i - fp_{i-1}) * (tp_i + tp_{i-1}) / (2 P N).
    long double area2 = 0.0L;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area2 += static_cast<long double>(b.fp - a.fp) * static_cast<long double>(b.tp + a.tp);
    }
    return static_cast<double>(area2 / (2.0L * static_cast<long double>(curve.positives) *
                                        static_cast<long double>(curve.negatives)));
}

std::string roc_to_csv(const RocCurve& curve) {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) {
        out += io::format_real(p.threshold);
        out += ',';
        out += io::format_real(p.fpr);
        out += ',';
        out += io::format_real(p.tpr);
        out += '\n';
    }
    return out;
}

}  // namespace forgerykit::metrics
