#include <algorithm>
#include <cmath>
#include <numeric>

#include "forgerykit/error.hpp"
#include "forgerykit/nn.hpp"
#include "forgerykit/rng.hpp"

namespace forgerykit::nn {

void ModelConfig::validate() const {
    if (input_channels != 3 && input_channels != 6) {
        throw Error(ErrorKind::InvalidArgument, "input_channels must be 3 or 6");
    }
    if (input_size < 1 || stem.empty() || head_units < 1) {
        throw Error(ErrorKind::InvalidArgument, "model dimensions must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "dropout_rate must lie in [0, 1)");
    }
    int size = input_size;
    for (const auto& c : stem) {
        if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
            throw Error(ErrorKind::InvalidArgument, "conv block dimensions must be positive");
        }
        size = (size + 2 * (c.kernel / 2) - c.kernel) / c.stride + 1;
        if (size < 1) {
            throw Error(ErrorKind::InvalidArgument, "input too small for the conv stem");
        }
    }
}

void TrainingConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorKind::InvalidArgument, "learning_rate must be a finite non-negative real");
    }
    if (max_epochs < 1 || patience < 1 || patience > max_epochs) {
        throw Error(ErrorKind::InvalidArgument, "need 1 <= patience <= max_epochs");
    }
    if (batch_size < 1) {
        throw Error(ErrorKind::InvalidArgument, "batch_size must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "invalid Adam hyperparameters");
    }
}

std::size_t ParamBlock::size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::vector<ParamBlock> param_layout(const ModelConfig& cfg) {
    std::vector<ParamBlock> blocks;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::vector<int> shape) {
        ParamBlock b{std::move(name), offset, std::move(shape)};
        offset += b.size();
        blocks.push_back(std::move(b));
    };
    int in = cfg.input_channels;
    for (std::size_t i = 0; i < cfg.stem.size(); ++i) {
        const auto& c = cfg.stem[i];
        const std::string prefix = "conv" + std::to_string(i + 1);
        add(prefix + ".weight", {c.kernel, c.kernel, in, c.out_channels});
        add(prefix + ".bias", {c.out_channels});
        in = c.out_channels;
    }
    add("dense.weight", {in, cfg.head_units});
    add("dense.bias", {cfg.head_units});
    add("output.weight", {cfg.head_units});
    add("output.bias", {1});
    return blocks;
}

std::size_t param_count(const ModelConfig& cfg) {
    const auto blocks = param_layout(cfg);
    return blocks.back().offset + blocks.back().size();
}

TrainedModel init_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    TrainedModel model;
    model.config = cfg;
    model.parameters.assign(param_count(cfg), 0.0);
    model.preprocess.target_width = cfg.input_size;
    model.preprocess.target_height = cfg.input_size;
    model.preprocess.input_mode = cfg.input_channels == 6 ? codec::InputMode::Hybrid : codec::InputMode::RgbOnly;
    Rng rng(seed);
    for (const auto& block : param_layout(cfg)) {
        if (block.name.ends_with(".bias")) {
            continue;
        }
        // Fan-in is the product of every dimension except the last (output)
        // one; output.weight is a vector feeding a single unit.
        std::size_t fan_in = block.size();
        if (block.shape.size() > 1) {
            fan_in /= static_cast<std::size_t>(block.shape.back());
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < block.size(); ++i) {
            model.parameters[block.offset + i] = rng.uniform(-limit, limit);
        }
    }
    return model;
}

namespace {

struct ConvGeom {
    int in_size, in_ch, out_size, out_ch, kernel, stride, pad;
    std::size_t w_off, b_off;
};

struct Geometry {
    std::vector<ConvGeom> convs;
    int feat_ch = 0;
    int units = 0;
    std::size_t dense_w = 0, dense_b = 0, out_w = 0, out_b = 0;
    double keep = 1.0;
};

Geometry make_geometry(const ModelConfig& cfg) {
    Geometry g;
    const auto blocks = param_layout(cfg);
    int size = cfg.input_size;
    int ch = cfg.input_channels;
    for (std::size_t i = 0; i < cfg.stem.size(); ++i) {
        const auto& c = cfg.stem[i];
        const int pad = c.kernel / 2;
        const int out = (size + 2 * pad - c.kernel) / c.stride + 1;
        g.convs.push_back({size, ch, out, c.out_channels, c.kernel, c.stride, pad, blocks[2 * i].offset,
                           blocks[2 * i + 1].offset});
        size = out;
        ch = c.out_channels;
    }
    const std::size_t n = cfg.stem.size() * 2;
    g.feat_ch = ch;
    g.units = cfg.head_units;
    g.dense_w = blocks[n].offset;
    g.dense_b = blocks[n + 1].offset;
    g.out_w = blocks[n + 2].offset;
    g.out_b = blocks[n + 3].offset;
    g.keep = 1.0 - cfg.dropout_rate;
    return g;
}

// Per-sample activations retained for the backward pass.
struct Trace {
    std::vector<std::vector<double>> acts;  // post-ReLU output of each conv block
    std::vector<double> pooled;
    std::vector<double> hidden;  // post-ReLU, pre-dropout
    std::vector<double> mask;    // dropout multiplier per unit (0 or 1/keep)
    double logit = 0.0;
};

void conv_forward(const ConvGeom& g, const double* params, const double* in, double* out) {
    const double* w = params + g.w_off;
    const double* b = params + g.b_off;
    const int O = g.out_ch;
    for (int oy = 0; oy < g.out_size; ++oy) {
        for (int ox = 0; ox < g.out_size; ++ox) {
            double* acc = out + (static_cast<std::size_t>(oy) * g.out_size + ox) * O;
            std::copy(b, b + O, acc);
            for (int ky = 0; ky < g.kernel; ++ky) {
                const int iy = oy * g.stride + ky - g.pad;
                if (iy < 0 || iy >= g.in_size) continue;
                for (int kx = 0; kx < g.kernel; ++kx) {
                    const int ix = ox * g.stride + kx - g.pad;
                    if (ix < 0 || ix >= g.in_size) continue;
                    const double* ip = in + (static_cast<std::size_t>(iy) * g.in_size + ix) * g.in_ch;
                    const double* wk = w + static_cast<std::size_t>(ky * g.kernel + kx) * g.in_ch * O;
                    for (int ic = 0; ic < g.in_ch; ++ic) {
                        const double v = ip[ic];
                        const double* wr = wk + static_cast<std::size_t>(ic) * O;
                        for (int oc = 0; oc < O; ++oc) {
                            acc[oc] += v * wr[oc];
                        }
                    }
                }
            }
            for (int oc = 0; oc < O; ++oc) {
                acc[oc] = acc[oc] > 0.0 ? acc[oc] : 0.0;
            }
        }
    }
}

// `dout` is the gradient w.r.t. the block's pre-activation. Accumulates
// weight/bias gradients and, when `din` is non-null, the input gradient.
void conv_backward(const ConvGeom& g, const double* params, const double* in, const double* dout, double* grad,
                   double* din) {
    const double* w = params + g.w_off;
    double* dw = grad + g.w_off;
    double* db = grad + g.b_off;
    const int O = g.out_ch;
    for (int oy = 0; oy < g.out_size; ++oy) {
        for (int ox = 0; ox < g.out_size; ++ox) {
            const double* go = dout + (static_cast<std::size_t>(oy) * g.out_size + ox) * O;
            for (int oc = 0; oc < O; ++oc) {
                db[oc] += go[oc];
            }
            for (int ky = 0; ky < g.kernel; ++ky) {
                const int iy = oy * g.stride + ky - g.pad;
                if (iy < 0 || iy >= g.in_size) continue;
                for (int kx = 0; kx < g.kernel; ++kx) {
                    const int ix = ox * g.stride + kx - g.pad;
                    if (ix < 0 || ix >= g.in_size) continue;
                    const std::size_t ipos = (static_cast<std::size_t>(iy) * g.in_size + ix) * g.in_ch;
                    const std::size_t kpos = static_cast<std::size_t>(ky * g.kernel + kx) * g.in_ch * O;
                    for (int ic = 0; ic < g.in_ch; ++ic) {
                        const double v = in[ipos + ic];
                        const double* wr = w + kpos + static_cast<std::size_t>(ic) * O;
                        double* dwr = dw + kpos + static_cast<std::size_t>(ic) * O;
                        double s = 0.0;
                        for (int oc = 0; oc < O; ++oc) {
                            dwr[oc] += v * go[oc];
                            s += wr[oc] * go[oc];
                        }
                        if (din) {
                            din[ipos + ic] += s;
                        }
                    }
                }
            }
        }
    }
}

void check_input(const ModelConfig& cfg, const NormalizedTensor& t) {
    if (t.width != cfg.input_size || t.height != cfg.input_size || t.channels != cfg.input_channels) {
        throw Error(ErrorKind::ShapeMismatch, "input is " + std::to_string(t.width) + "x" + std::to_string(t.height) +
                                                  "x" + std::to_string(t.channels) + ", model expects " +
                                                  std::to_string(cfg.input_size) + "x" +
                                                  std::to_string(cfg.input_size) + "x" +
                                                  std::to_string(cfg.input_channels));
    }
}

void fill_mask(Trace& tr, const Geometry& g, std::optional<std::uint64_t> dropout_seed, std::size_t sample) {
    tr.mask.assign(static_cast<std::size_t>(g.units), 1.0);
    if (!dropout_seed || g.keep >= 1.0) {
        return;
    }
    Rng rng(mix_seed(*dropout_seed, sample));
    const double scale = 1.0 / g.keep;
    for (auto& m : tr.mask) {
        m = rng.uniform() < g.keep ? scale : 0.0;
    }
}

void run_forward(const Geometry& g, const std::vector<double>& params, const NormalizedTensor& input, Trace& tr) {
    const double* p = params.data();
    tr.acts.resize(g.convs.size());
    const double* in = input.data.data();
    for (std::size_t l = 0; l < g.convs.size(); ++l) {
        const auto& c = g.convs[l];
        tr.acts[l].assign(static_cast<std::size_t>(c.out_size) * c.out_size * c.out_ch, 0.0);
        conv_forward(c, p, in, tr.acts[l].data());
        in = tr.acts[l].data();
    }
    const auto& last = g.convs.back();
    const std::size_t spatial = static_cast<std::size_t>(last.out_size) * last.out_size;
    tr.pooled.assign(static_cast<std::size_t>(g.feat_ch), 0.0);
    for (std::size_t s = 0; s < spatial; ++s) {
        for (int c = 0; c < g.feat_ch; ++c) {
            tr.pooled[static_cast<std::size_t>(c)] += in[s * g.feat_ch + c];
        }
    }
    for (auto& v : tr.pooled) {
        v /= static_cast<double>(spatial);
    }

    tr.hidden.assign(p + g.dense_b, p + g.dense_b + g.units);
    for (int c = 0; c < g.feat_ch; ++c) {
        const double v = tr.pooled[static_cast<std::size_t>(c)];
        const double* wr = p + g.dense_w + static_cast<std::size_t>(c) * g.units;
        for (int j = 0; j < g.units; ++j) {
            tr.hidden[static_cast<std::size_t>(j)] += v * wr[j];
        }
    }
    double z = p[g.out_b];
    for (int j = 0; j < g.units; ++j) {
        auto& h = tr.hidden[static_cast<std::size_t>(j)];
        h = h > 0.0 ? h : 0.0;
        z += p[g.out_w + static_cast<std::size_t>(j)] * h * tr.mask[static_cast<std::size_t>(j)];
    }
    tr.logit = z;
}

void run_backward(const Geometry& g, const std::vector<double>& params, const NormalizedTensor& input,
                  const Trace& tr, double dz, std::vector<double>& grad, std::vector<std::vector<double>>& scratch) {
    const double* p = params.data();
    double* gr = grad.data();
    gr[g.out_b] += dz;
    std::vector<double> dpre(static_cast<std::size_t>(g.units));
    for (int j = 0; j < g.units; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const double hd = tr.hidden[ju] * tr.mask[ju];
        gr[g.out_w + ju] += dz * hd;
        dpre[ju] = tr.hidden[ju] > 0.0 ? dz * p[g.out_w + ju] * tr.mask[ju] : 0.0;
        gr[g.dense_b + ju] += dpre[ju];
    }
    std::vector<double> dpool(static_cast<std::size_t>(g.feat_ch), 0.0);
    for (int c = 0; c < g.feat_ch; ++c) {
        const double v = tr.pooled[static_cast<std::size_t>(c)];
        const double* wr = p + g.dense_w + static_cast<std::size_t>(c) * g.units;
        double* dwr = gr + g.dense_w + static_cast<std::size_t>(c) * g.units;
        double s = 0.0;
        for (int j = 0; j < g.units; ++j) {
            dwr[j] += v * dpre[static_cast<std::size_t>(j)];
            s += wr[j] * dpre[static_cast<std::size_t>(j)];
        }
        dpool[static_cast<std::size_t>(c)] = s;
    }

    const std::size_t L = g.convs.size();
    scratch.resize(L);
    // scratch[l] holds the gradient w.r.t. the pre-activation of block l.
    {
        const auto& last = g.convs.back();
        const std::size_t spatial = static_cast<std::size_t>(last.out_size) * last.out_size;
        auto& d = scratch[L - 1];
        d.assign(tr.acts[L - 1].size(), 0.0);
        const double inv = 1.0 / static_cast<double>(spatial);
        for (std::size_t s = 0; s < spatial; ++s) {
            for (int c = 0; c < g.feat_ch; ++c) {
                const std::size_t k = s * g.feat_ch + c;
                d[k] = tr.acts[L - 1][k] > 0.0 ? dpool[static_cast<std::size_t>(c)] * inv : 0.0;
            }
        }
    }
    for (std::size_t l = L; l-- > 0;) {
        const double* in = l == 0 ? input.data.data() : tr.acts[l - 1].data();
        double* din = nullptr;
        if (l > 0) {
            scratch[l - 1].assign(tr.acts[l - 1].size(), 0.0);
            din = scratch[l - 1].data();
        }
        conv_backward(g.convs[l], p, in, scratch[l].data(), gr, din);
        if (l > 0) {
            const auto& a = tr.acts[l - 1];
            for (std::size_t k = 0; k < a.size(); ++k) {
                if (a[k] <= 0.0) {
                    din[k] = 0.0;
                }
            }
        }
    }
}

// Kept strictly inside (0, 1): saturated logits map to the nearest
// representable neighbours of 0 and 1.
double sigmoid(double z) {
    static const double lo = std::nextafter(0.0, 1.0);
    static const double hi = std::nextafter(1.0, 0.0);
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return std::clamp(p, lo, hi);
}

void check_params(const TrainedModel& model) {
    if (model.parameters.size() != param_count(model.config)) {
        throw Error(ErrorKind::ShapeMismatch, "parameter vector does not match the model layout");
    }
}

}  // namespace

std::vector<double> forward_logits(const TrainedModel& model, std::span<const NormalizedTensor> batch,
                                   std::optional<std::uint64_t> dropout_seed) {
    check_params(model);
    const Geometry g = make_geometry(model.config);
    std::vector<double> out;
    out.reserve(batch.size());
    Trace tr;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_input(model.config, batch[i]);
        fill_mask(tr, g, dropout_seed, i);
        run_forward(g, model.parameters, batch[i], tr);
        out.push_back(tr.logit);
    }
    return out;
}

std::vector<double> forward(const TrainedModel& model, std::span<const NormalizedTensor> batch, bool train_mode,
                            std::optional<std::uint64_t> rng_seed) {
    if (train_mode && !rng_seed) {
        throw Error(ErrorKind::InvalidArgument, "train-mode forward needs a dropout seed");
    }
    auto out = forward_logits(model, batch, train_mode ? rng_seed : std::nullopt);
    for (auto& z : out) {
        z = sigmoid(z);
    }
    return out;
}

double bce_loss(std::span<const double> probs, std::span<const int> labels) {
    if (probs.size() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch, "probabilities and labels differ in length");
    }
    if (probs.empty()) {
        throw Error(ErrorKind::EmptyInput, "bce_loss of an empty batch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kProbEpsilon, 1.0 - kProbEpsilon);
        sum -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return sum / static_cast<double>(probs.size());
}

LossAndGradient loss_and_gradient(const TrainedModel& model, std::span<const NormalizedTensor* const> batch,
                                  std::span<const int> labels, std::optional<std::uint64_t> dropout_seed) {
    check_params(model);
    if (batch.size() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch, "batch and labels differ in length");
    }
    if (batch.empty()) {
        throw Error(ErrorKind::EmptyInput, "gradient of an empty batch");
    }
    const Geometry g = make_geometry(model.config);
    LossAndGradient out;
    out.gradient.assign(model.parameters.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Trace tr;
    std::vector<std::vector<double>> scratch;
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_input(model.config, *batch[i]);
        fill_mask(tr, g, dropout_seed, i);
        run_forward(g, model.parameters, *batch[i], tr);
        const double p = sigmoid(tr.logit);
        const int y = labels[i];
        const double pc = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
        loss -= y == 1 ? std::log(pc) : std::log(1.0 - pc);
        // Inside the clamp band dL/dz = p - y; outside it the loss is flat.
        const double dz = (p > kProbEpsilon && p < 1.0 - kProbEpsilon) ? (p - y) * inv_n : 0.0;
        if (dz != 0.0) {
            run_backward(g, model.parameters, *batch[i], tr, dz, out.gradient, scratch);
        }
    }
    out.loss = loss * inv_n;
    return out;
}

std::vector<double> backward(const TrainedModel& model, std::span<const NormalizedTensor> batch,
                             std::span<const int> labels, std::optional<std::uint64_t> dropout_seed) {
    std::vector<const NormalizedTensor*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& t : batch) {
        ptrs.push_back(&t);
    }
    return loss_and_gradient(model, ptrs, labels, dropout_seed).gradient;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, long t,
               const TrainingConfig& cfg) {
    if (params.size() != grads.size()) {
        throw Error(ErrorKind::LengthMismatch, "parameters and gradients differ in length");
    }
    if (t < 1) {
        throw Error(ErrorKind::InvalidArgument, "Adam step index starts at 1");
    }
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw Error(ErrorKind::LengthMismatch, "Adam state does not match the parameter vector");
    }
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double gi = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * gi;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * gi * gi;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
}

}  // namespace forgerykit::nn
