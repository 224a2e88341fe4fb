#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "forgerykit/error.hpp"
#include "forgerykit/nn.hpp"
#include "forgerykit/rng.hpp"

namespace forgerykit::nn {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;   // "SH"
constexpr std::uint64_t kDropoutStream = 0x4450;   // "DP"
constexpr std::uint64_t kInitStream = 0x494e;      // "IN"

double eval_loss(const TrainedModel& model, std::span<const LabeledTensor> data) {
    std::vector<double> probs;
    std::vector<int> labels;
    probs.reserve(data.size());
    labels.reserve(data.size());
    for (const auto& item : data) {
        probs.push_back(forward(model, std::span(&item.input, 1), false).front());
        labels.push_back(item.label);
    }
    return bce_loss(probs, labels);
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace

TrainedModel train(std::span<const LabeledTensor> train_set, std::span<const LabeledTensor> val_set,
                   const ModelConfig& mcfg, const TrainingConfig& tcfg, const EpochCallback& on_epoch) {
    mcfg.validate();
    tcfg.validate();
    if (train_set.empty() || val_set.empty()) {
        throw Error(ErrorKind::EmptySplit, "training needs non-empty train and validation sets");
    }

    TrainedModel model = init_model(mcfg, mix_seed(tcfg.seed, kInitStream));
    TrainedModel best = model;
    AdamState adam;
    Rng shuffler(mix_seed(tcfg.seed, kShuffleStream));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    long step = 0;
    int since_improvement = 0;
    const auto bs = static_cast<std::size_t>(tcfg.batch_size);
    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        shuffler.shuffle(std::span<std::size_t>(order));
        double train_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            std::vector<const NormalizedTensor*> batch;
            std::vector<int> labels;
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(&train_set[order[k]].input);
                labels.push_back(train_set[order[k]].label);
            }
            ++step;
            auto lg = loss_and_gradient(model, batch, labels,
                                        mix_seed(tcfg.seed, kDropoutStream + static_cast<std::uint64_t>(step) * 0x10000));
            adam_step(model.parameters, lg.gradient, adam, step, tcfg);
            train_total += lg.loss * static_cast<double>(end - start);
        }
        const double train_loss = train_total / static_cast<double>(order.size());
        const double val_loss = eval_loss(model, val_set);
        const bool improved = val_loss < best.best_val_loss;
        model.epochs_run = epoch;
        if (improved) {
            model.best_val_loss = val_loss;
            best.parameters = model.parameters;
            best.best_val_loss = val_loss;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        best.epochs_run = epoch;
        if (on_epoch) {
            on_epoch({epoch, train_loss, val_loss, improved});
        }
        if (since_improvement >= tcfg.patience) {
            break;
        }
    }
    return best;
}

std::vector<LabeledTensor> load_inputs(std::span<const dataset::SampleRecord> records, const fs::path& data_root,
                                       const codec::PreprocessConfig& preprocess, int jobs) {
    preprocess.validate();
    std::vector<LabeledTensor> out(records.size());
    parallel_for(records.size(), jobs, [&](std::size_t i) {
        const auto& r = records[i];
        const fs::path path = data_root / r.id;
        if (!fs::exists(path)) {
            throw Error(ErrorKind::MissingFile, path.string());
        }
        out[i].input = codec::preprocess(codec::load_image(path), preprocess);
        out[i].label = static_cast<int>(r.label);
    });
    return out;
}

TrainedModel train(const dataset::Manifest& manifest, const fs::path& data_root,
                   const codec::PreprocessConfig& preprocess, const ModelConfig& mcfg, const TrainingConfig& tcfg,
                   bool test_as_validation, const EpochCallback& on_epoch, int jobs) {
    if (mcfg.input_channels != codec::channels_for(preprocess.input_mode) ||
        mcfg.input_size != preprocess.target_width || mcfg.input_size != preprocess.target_height) {
        throw Error(ErrorKind::ShapeMismatch, "model input does not match the preprocessing output");
    }
    const auto train_records = manifest.subset(dataset::Split::Train);
    const auto val_records = manifest.subset(test_as_validation ? dataset::Split::Test : dataset::Split::Validation);
    if (train_records.empty() || val_records.empty()) {
        throw Error(ErrorKind::EmptySplit, test_as_validation ? "manifest needs train and test records"
                                                              : "manifest needs train and val records");
    }
    const auto train_set = load_inputs(train_records, data_root, preprocess, jobs);
    const auto val_set = load_inputs(val_records, data_root, preprocess, jobs);
    TrainedModel model = train(train_set, val_set, mcfg, tcfg, on_epoch);
    model.preprocess = preprocess;
    return model;
}

std::vector<ScoredSample> predict_scores(const TrainedModel& model, std::span<const dataset::SampleRecord> records,
                                         const fs::path& data_root, const codec::PreprocessConfig& preprocess,
                                         int jobs) {
    if (model.config.input_channels != codec::channels_for(preprocess.input_mode) ||
        model.config.input_size != preprocess.target_width || model.config.input_size != preprocess.target_height) {
        throw Error(ErrorKind::ShapeMismatch, "model input does not match the preprocessing output");
    }
    std::vector<dataset::SampleRecord> sorted(records.begin(), records.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    const auto inputs = load_inputs(sorted, data_root, preprocess, jobs);

    std::vector<ScoredSample> out;
    out.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double p = forward(model, std::span(&inputs[i].input, 1), false).front();
        out.push_back({sorted[i].id, inputs[i].label, p});
    }
    return out;
}

}  // namespace forgerykit::nn
