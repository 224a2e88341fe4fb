#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls the code under test except to evaluate losses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "forgerykit/nn.hpp"
#include "forgerykit/rng.hpp"
#include "forgerykit/scored_sample.hpp"

namespace fk_oracle {

// ---- finite differences -------------------------------------------------

struct GradCheck {
    std::size_t checked = 0;
    std::size_t kinks = 0;     // coordinates whose +/-h step crosses a ReLU kink
    std::size_t failures = 0;  // coordinates outside tolerance (kinks excluded)
    double max_rel_error = 0.0;
};

// |a - b| relative to the larger magnitude, with an absolute floor on the
// denominator so near-zero gradients are not judged on noise.
inline double rel_error(double a, double b, double floor = 1e-8) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Compares `analytic` against central differences of the mean BCE loss at
// the given coordinates. A coordinate that fails at step h but passes at
// h / 10, h / 100 or h / 1000 is classed as a kink: a ReLU boundary lies
// within h of the current value. A genuine gradient error does not shrink
// with the step.
inline GradCheck gradient_check(const forgerykit::nn::TrainedModel& model,
                                std::span<const forgerykit::NormalizedTensor> batch, std::span<const int> labels,
                                std::optional<std::uint64_t> dropout_seed, std::span<const double> analytic,
                                std::span<const std::size_t> coords, double h = 1e-4, double tol = 1e-3) {
    using namespace forgerykit;
    auto loss = [&](const nn::TrainedModel& m) {
        const auto logits = nn::forward_logits(m, batch, dropout_seed);
        double sum = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double p = 1.0 / (1.0 + std::exp(-logits[i]));
            const double pc = std::clamp(p, nn::kProbEpsilon, 1.0 - nn::kProbEpsilon);
            sum -= labels[i] == 1 ? std::log(pc) : std::log(1.0 - pc);
        }
        return sum / static_cast<double>(logits.size());
    };
    GradCheck out;
    nn::TrainedModel probe = model;
    auto central = [&](std::size_t i, double step) {
        const double base = model.parameters[i];
        probe.parameters[i] = base + step;
        const double lp = loss(probe);
        probe.parameters[i] = base - step;
        const double lm = loss(probe);
        probe.parameters[i] = base;
        return (lp - lm) / (2.0 * step);
    };
    for (const std::size_t i : coords) {
        ++out.checked;
        const double err = rel_error(central(i, h), analytic[i]);
        if (err < tol) {
            out.max_rel_error = std::max(out.max_rel_error, err);
        } else if (rel_error(central(i, h / 10.0), analytic[i]) < tol ||
                   rel_error(central(i, h / 100.0), analytic[i]) < tol ||
                   rel_error(central(i, h / 1000.0), analytic[i]) < tol) {
            ++out.kinks;
        } else {
            ++out.failures;
            out.max_rel_error = std::max(out.max_rel_error, err);
        }
    }
    return out;
}

inline forgerykit::NormalizedTensor random_input(forgerykit::Rng& rng, int size, int channels) {
    forgerykit::NormalizedTensor t(size, size, channels);
    for (auto& v : t.data) {
        v = rng.uniform();
    }
    return t;
}

// Randomized reduced-width model: 3 stride-2 blocks of 4..8 channels and a
// 4..16 unit head, so every coordinate can be differenced quickly.
inline forgerykit::nn::ModelConfig random_tiny_config(forgerykit::Rng& rng, int input_size) {
    forgerykit::nn::ModelConfig cfg;
    cfg.input_size = input_size;
    cfg.input_channels = rng.below(2) == 0 ? 3 : 6;
    for (auto& block : cfg.stem) {
        block.out_channels = 4 + static_cast<int>(rng.below(5));
    }
    cfg.head_units = 4 + static_cast<int>(rng.below(13));
    return cfg;
}

// Perturbs every parameter (biases included) so no coordinate sits at an
// initialization special case.
inline void jitter(forgerykit::nn::TrainedModel& model, forgerykit::Rng& rng, double scale) {
    for (auto& p : model.parameters) {
        p += rng.uniform(-scale, scale);
    }
}

// ---- ranking --------------------------------------------------------------

// Mann-Whitney U / (P * N) by pairwise comparison; ties count one half.
// Numerator kept in half-units so the only rounding is the final division.
inline double mann_whitney_auc(std::span<const forgerykit::ScoredSample> s) {
    std::int64_t half_units = 0;
    std::int64_t p = 0;
    std::int64_t n = 0;
    for (const auto& a : s) {
        (a.label == 1 ? p : n) += 1;
    }
    for (const auto& a : s) {
        if (a.label != 1) {
            continue;
        }
        for (const auto& b : s) {
            if (b.label != 0) {
                continue;
            }
            half_units += a.score > b.score ? 2 : (a.score == b.score ? 1 : 0);
        }
    }
    return static_cast<double>(half_units) / (2.0 * static_cast<double>(p) * static_cast<double>(n));
}

struct Rates {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t p = 0;
    std::int64_t n = 0;
};

inline Rates rates_at(std::span<const forgerykit::ScoredSample> s, double threshold) {
    Rates r;
    for (const auto& x : s) {
        const bool pred = x.score >= threshold;
        if (x.label == 1) {
            ++r.p;
            r.tp += pred ? 1 : 0;
        } else {
            ++r.n;
            r.fp += pred ? 1 : 0;
        }
    }
    return r;
}

// Youden J scaled by P * N: exact integer comparison between thresholds.
inline std::int64_t scaled_j(const Rates& r) { return r.tp * r.n - r.fp * r.p; }

}  // namespace fk_oracle
