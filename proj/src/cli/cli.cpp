#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "forgerykit/calibration.hpp"
#include "forgerykit/cli.hpp"
#include "forgerykit/codec.hpp"
#include "forgerykit/dataset.hpp"
#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"
#include "forgerykit/metrics.hpp"
#include "forgerykit/nn.hpp"
#include "forgerykit/report.hpp"

namespace forgerykit::cli {

namespace fs = std::filesystem;

namespace {

// Config keys ("section.key") and the long flag each one feeds. A key only
// applies to commands that define that flag.
const std::map<std::string, std::string>& config_keys() {
    static const std::map<std::string, std::string> keys = {
        {"run.seed", "--seed"},
        {"run.jobs", "--jobs"},
        {"synth.n_authentic", "--n-authentic"},
        {"synth.n_tampered", "--n-tampered"},
        {"synth.size", "--size"},
        {"split.train_ratio", "--train-ratio"},
        {"split.val_ratio", "--val-ratio"},
        {"split.ratio", "--ratio"},
        {"split.replication_split", "--replication-split"},
        {"dataset.authentic_dir", "--authentic-dir"},
        {"dataset.tampered_dir", "--tampered-dir"},
        {"preprocess.size", "--size"},
        {"preprocess.jpeg_quality", "--jpeg-quality"},
        {"preprocess.input_mode", "--input-mode"},
        {"preprocess.subsampling", "--subsampling"},
        {"model.head_units", "--head-units"},
        {"model.dropout_rate", "--dropout-rate"},
        {"training.learning_rate", "--learning-rate"},
        {"training.max_epochs", "--max-epochs"},
        {"training.patience", "--patience"},
        {"training.batch_size", "--batch-size"},
        {"training.adam_beta1", "--adam-beta1"},
        {"training.adam_beta2", "--adam-beta2"},
        {"training.adam_eps", "--adam-eps"},
        {"evaluate.averaging", "--averaging"},
    };
    return keys;
}

int default_jobs() {
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

void feed(CLI::Option* opt, const std::string& value) {
    opt->add_result(value);
    opt->run_callback();
}

// Fills options not given on the command line: config file first, then
// FORGERYKIT_SEED for --seed.
void apply_defaults(CLI::App& cmd, const std::string& config_path) {
    if (!config_path.empty()) {
        const auto entries = parse_config(io::read_text(config_path));
        for (const auto& [key, value] : entries) {
            const auto it = config_keys().find(key);
            if (it == config_keys().end()) {
                throw Error(ErrorKind::InvalidArgument, "unknown config key " + key);
            }
            CLI::Option* opt = cmd.get_option_no_throw(it->second);
            if (opt != nullptr && opt->count() == 0) {
                feed(opt, value);
            }
        }
    }
    CLI::Option* seed = cmd.get_option_no_throw("--seed");
    if (seed != nullptr && seed->count() == 0) {
        if (const char* env = std::getenv("FORGERYKIT_SEED"); env != nullptr && *env != '\0') {
            feed(seed, env);
        }
    }
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
            return kExitUsage;
        case ErrorKind::EncodeFailure:
        case ErrorKind::IoFailure:
            return kExitInternal;
        default:
            return kExitData;
    }
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

// Options shared by several commands.
struct Common {
    std::string config;
    int jobs = default_jobs();
    std::uint64_t seed = 0;
};

void add_config(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "TOML-style run config; flags override it")->check(CLI::ExistingFile);
}

void add_jobs(CLI::App* cmd, Common& c) {
    cmd->add_option("--jobs", c.jobs, "preprocessing workers (output does not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

void add_seed(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "random seed (default: $FORGERYKIT_SEED, else 0)")->capture_default_str();
}

struct PreprocessFlags {
    int size = 64;
    int jpeg_quality = 90;
    std::string input_mode = "hybrid";
    std::string subsampling = "420";

    void add(CLI::App* cmd) {
        cmd->add_option("--size", size, "square input size in pixels")->capture_default_str();
        cmd->add_option("--jpeg-quality", jpeg_quality, "recompression quality for FDIFF (1-100)")
            ->capture_default_str();
        cmd->add_option("--input-mode", input_mode, "rgb | fdiff | hybrid")->capture_default_str();
        cmd->add_option("--subsampling", subsampling, "recompression chroma subsampling: 420 | 444")
            ->capture_default_str();
    }

    codec::PreprocessConfig build() const {
        codec::PreprocessConfig p;
        p.target_width = size;
        p.target_height = size;
        p.jpeg_quality = jpeg_quality;
        p.input_mode = codec::parse_input_mode(input_mode);
        p.subsampling = codec::parse_subsampling(subsampling);
        p.validate();
        return p;
    }
};

// --- commands -------------------------------------------------------------

struct SynthCmd {
    Common common;
    int n_authentic = 100;
    int n_tampered = 100;
    int size = 64;
    std::string out;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os) {
        auto* cmd = app.add_subcommand("synth", "generate a synthetic splice dataset (Au/, Tp/, manifest.jsonl)");
        add_config(cmd, common);
        add_seed(cmd, common);
        cmd->add_option("--n-authentic", n_authentic, "authentic images")->capture_default_str();
        cmd->add_option("--n-tampered", n_tampered, "tampered images")->capture_default_str();
        cmd->add_option("--size", size, "image side in pixels")->capture_default_str();
        cmd->add_option("--out", out, "output dataset root")->required();
        cmd->callback([this, cmd, &action, &os] {
            apply_defaults(*cmd, common.config);
            action = [this, &os] {
                const auto m = dataset::generate_synthetic_dataset(n_authentic, n_tampered, size, common.seed, out);
                dataset::save_manifest(m, fs::path(out) / "manifest.jsonl");
                os << "authentic=" << m.count(dataset::Label::Authentic)
                   << " tampered=" << m.count(dataset::Label::Tampered) << '\n';
                return kExitOk;
            };
        });
    }
};

struct PrepareCmd {
    Common common;
    std::string root;
    std::string out;
    dataset::Layout layout;
    double train_ratio = 0.7;
    double val_ratio = 0.1;
    double ratio = 0.8;
    bool replication = false;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os, std::ostream& es) {
        auto* cmd = app.add_subcommand("prepare", "scan a dataset and write a stratified split manifest");
        add_config(cmd, common);
        add_seed(cmd, common);
        cmd->add_option("--root", root, "dataset root")->required();
        cmd->add_option("--authentic-dir", layout.authentic_dir, "authentic class directory")->capture_default_str();
        cmd->add_option("--tampered-dir", layout.tampered_dir, "tampered class directory")->capture_default_str();
        cmd->add_option("--train-ratio", train_ratio, "three-way split: train fraction")->capture_default_str();
        cmd->add_option("--val-ratio", val_ratio, "three-way split: validation fraction")->capture_default_str();
        cmd->add_flag("--replication-split", replication,
                      "two-way train/test split; training then validates on the test split");
        cmd->add_option("--ratio", ratio, "train fraction for --replication-split")->capture_default_str();
        cmd->add_option("--out", out, "output manifest (JSON Lines)")->required();
        cmd->callback([this, cmd, &action, &os, &es] {
            apply_defaults(*cmd, common.config);
            action = [this, &os, &es] {
                std::vector<std::string> skipped;
                const auto scanned = dataset::scan_dataset(root, layout, &skipped);
                for (const auto& id : skipped) {
                    es << "forgerykit: warning: skipped undecodable " << id << '\n';
                }
                const auto m = replication ? dataset::stratified_split(scanned, ratio, common.seed)
                                           : dataset::stratified_split(scanned, train_ratio, val_ratio, common.seed);
                dataset::save_manifest(m, out);
                os << "train=" << m.count(dataset::Split::Train) << " val=" << m.count(dataset::Split::Validation)
                   << " test=" << m.count(dataset::Split::Test) << " skipped=" << skipped.size() << '\n';
                return kExitOk;
            };
        });
    }
};

struct TrainCmd {
    Common common;
    std::string manifest;
    std::string data_root;
    std::string out;
    PreprocessFlags pre;
    nn::ModelConfig model;
    nn::TrainingConfig training;
    bool replication = false;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os) {
        auto* cmd = app.add_subcommand("train", "train the classifier; prints one line per epoch");
        add_config(cmd, common);
        add_seed(cmd, common);
        add_jobs(cmd, common);
        cmd->add_option("--manifest", manifest, "split manifest")->required();
        cmd->add_option("--data-root", data_root, "dataset root (default: the manifest's directory)");
        cmd->add_option("--out", out, "output checkpoint")->required();
        pre.add(cmd);
        cmd->add_option("--head-units", model.head_units, "dense head width")->capture_default_str();
        cmd->add_option("--dropout-rate", model.dropout_rate, "head dropout rate")->capture_default_str();
        cmd->add_option("--learning-rate", training.learning_rate, "Adam learning rate")->capture_default_str();
        cmd->add_option("--max-epochs", training.max_epochs, "epoch limit")->capture_default_str();
        cmd->add_option("--patience", training.patience, "early-stopping patience in epochs")
            ->capture_default_str();
        cmd->add_option("--batch-size", training.batch_size, "minibatch size")->capture_default_str();
        cmd->add_option("--adam-beta1", training.adam_beta1, "Adam beta1")->capture_default_str();
        cmd->add_option("--adam-beta2", training.adam_beta2, "Adam beta2")->capture_default_str();
        cmd->add_option("--adam-eps", training.adam_eps, "Adam epsilon")->capture_default_str();
        cmd->add_flag("--replication-split", replication, "validate on the test split (two-way manifests)");
        cmd->callback([this, cmd, &action, &os] {
            apply_defaults(*cmd, common.config);
            const auto preprocess = pre.build();
            model.input_size = preprocess.target_width;
            model.input_channels = codec::channels_for(preprocess.input_mode);
            training.seed = common.seed;
            model.validate();
            training.validate();
            action = [this, preprocess, &os] {
                const auto m = dataset::load_manifest(manifest);
                const fs::path root = data_root.empty() ? fs::path(manifest).parent_path() : fs::path(data_root);
                const auto trained = nn::train(
                    m, root, preprocess, model, training, replication,
                    [&os](const nn::EpochLog& e) {
                        os << "epoch=" << e.epoch << " train_loss=" << io::format_real(e.train_loss)
                           << " val_loss=" << io::format_real(e.val_loss) << " improved=" << (e.improved ? 1 : 0)
                           << '\n';
                        os.flush();
                    },
                    common.jobs);
                nn::save_checkpoint(trained, out);
                os << "epochs_run=" << trained.epochs_run
                   << " best_val_loss=" << io::format_real(trained.best_val_loss) << '\n';
                return kExitOk;
            };
        });
    }
};

struct ScoreCmd {
    Common common;
    std::string model;
    std::string manifest;
    std::string data_root;
    std::string split = "test";
    std::string out;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os) {
        auto* cmd = app.add_subcommand("score", "score one manifest split with a checkpoint");
        add_config(cmd, common);
        add_jobs(cmd, common);
        cmd->add_option("--model", model, "checkpoint")->required();
        cmd->add_option("--manifest", manifest, "split manifest")->required();
        cmd->add_option("--data-root", data_root, "dataset root (default: the manifest's directory)");
        cmd->add_option("--split", split, "train | val | test | unassigned")->capture_default_str();
        cmd->add_option("--out", out, "output score CSV")->required();
        cmd->callback([this, cmd, &action, &os] {
            apply_defaults(*cmd, common.config);
            const auto which = dataset::parse_split(split);
            action = [this, which, &os] {
                const auto trained = nn::load_checkpoint(model);
                const auto m = dataset::load_manifest(manifest);
                const auto records = m.subset(which);
                if (records.empty()) {
                    throw Error(ErrorKind::EmptySplit, "manifest has no " + split + " records");
                }
                const fs::path root = data_root.empty() ? fs::path(manifest).parent_path() : fs::path(data_root);
                const auto scores = nn::predict_scores(trained, records, root, trained.preprocess, common.jobs);
                calibration::save_scores(scores, out);
                os << "scored=" << scores.size() << '\n';
                return kExitOk;
            };
        });
    }
};

struct CalibrateCmd {
    Common common;
    std::string scores;
    std::string model_id = "model";
    std::string out;
    std::optional<double> fixed;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os) {
        auto* cmd = app.add_subcommand("calibrate", "choose the Youden-optimal threshold for a score file");
        add_config(cmd, common);
        cmd->add_option("--scores", scores, "score CSV")->required();
        cmd->add_option("--model-id", model_id, "model identifier recorded in the output")->capture_default_str();
        cmd->add_option("--fixed-threshold", fixed, "skip optimization and record this threshold");
        cmd->add_option("--out", out, "output calibration JSON")->required();
        cmd->callback([this, cmd, &action, &os] {
            apply_defaults(*cmd, common.config);
            if (fixed && !(*fixed >= 0.0 && *fixed <= 1.0)) {
                throw Error(ErrorKind::InvalidArgument, "--fixed-threshold must lie in [0, 1]");
            }
            action = [this, &os] {
                const auto s = calibration::load_scores(scores);
                const auto cal = fixed ? calibration::fixed_threshold(s, model_id, *fixed)
                                       : calibration::youden_optimal_threshold(s, model_id);
                calibration::save_calibration(cal, out);
                os << "threshold=" << io::format_real(cal.threshold) << " youden_j=" << io::format_real(cal.youden_j)
                   << '\n';
                return kExitOk;
            };
        });
    }
};

struct EvaluateCmd {
    Common common;
    std::string scores;
    std::string calibration_path;
    std::optional<double> fixed;
    std::string holdout;
    std::string averaging = "weighted";
    std::string model_id;
    std::string out;
    std::string roc_csv;
    std::string confusion_csv;
    std::string model;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os) {
        auto* cmd = app.add_subcommand("evaluate", "evaluate a score file and write a report");
        add_config(cmd, common);
        cmd->add_option("--scores", scores, "score CSV to evaluate")->required();
        auto* c = cmd->add_option("--calibration", calibration_path, "threshold from a calibration JSON");
        auto* f = cmd->add_option("--fixed-threshold", fixed, "use this threshold instead of calibrating");
        auto* h = cmd->add_option("--holdout-calibration", holdout,
                                  "calibrate on this (validation) score CSV instead of the evaluated scores");
        c->excludes(f)->excludes(h);
        f->excludes(h);
        cmd->add_option("--averaging", averaging, "binary | macro | weighted")->capture_default_str();
        cmd->add_option("--model-id", model_id, "model identifier (default: from the calibration, else \"model\")");
        cmd->add_option("--out", out, "output report JSON")->required();
        cmd->add_option("--roc-csv", roc_csv, "also write the ROC curve");
        cmd->add_option("--confusion-csv", confusion_csv, "also write the confusion matrix");
        cmd->add_option("--model", model, "checkpoint whose preprocessing settings are echoed in the report");
        cmd->footer(
            "Without --calibration, --fixed-threshold or --holdout-calibration the Youden-optimal threshold of the "
            "evaluated scores is used.");
        cmd->callback([this, cmd, &action, &os] {
            apply_defaults(*cmd, common.config);
            const auto avg = metrics::parse_averaging(averaging);
            if (fixed && !(*fixed >= 0.0 && *fixed <= 1.0)) {
                throw Error(ErrorKind::InvalidArgument, "--fixed-threshold must lie in [0, 1]");
            }
            action = [this, avg, &os] {
                const auto s = calibration::load_scores(scores);
                std::string source;
                calibration::ThresholdCalibration cal;
                if (!calibration_path.empty()) {
                    cal = calibration::load_calibration(calibration_path);
                    source = "calibration_file";
                } else if (fixed) {
                    cal = calibration::fixed_threshold(s, model_id.empty() ? "model" : model_id, *fixed);
                    source = "fixed";
                } else if (!holdout.empty()) {
                    cal = calibration::youden_optimal_threshold(calibration::load_scores(holdout),
                                                                model_id.empty() ? "model" : model_id);
                    source = "youden_holdout";
                } else {
                    cal = calibration::youden_optimal_threshold(s, model_id.empty() ? "model" : model_id);
                    source = "youden";
                }
                if (!model_id.empty()) {
                    cal.model_id = model_id;
                }
                report::ConfigEcho echo = {{"averaging", std::string(metrics::to_string(avg))},
                                           {"threshold_source", source},
                                           {"samples", std::to_string(s.size())}};
                if (!model.empty()) {
                    const auto p = nn::load_checkpoint(model).preprocess;
                    echo.emplace_back("input_mode", std::string(codec::to_string(p.input_mode)));
                    echo.emplace_back("size", std::to_string(p.target_width) + "x" + std::to_string(p.target_height));
                    echo.emplace_back("jpeg_quality", std::to_string(p.jpeg_quality));
                    echo.emplace_back("subsampling", std::string(codec::to_string(p.subsampling)));
                }
                const auto r = report::evaluate(s, cal, avg, std::move(echo));
                report::save_report(r, out);
                if (!roc_csv.empty()) {
                    io::write_file_atomic(roc_csv, metrics::roc_to_csv(metrics::roc_curve(s)));
                }
                if (!confusion_csv.empty()) {
                    io::write_file_atomic(confusion_csv, report::export_confusion(r.confusion));
                }
                os << "accuracy=" << fmt("%.4f", r.metrics.accuracy) << " f1=" << fmt("%.4f", r.metrics.f1)
                   << " mcc=" << fmt("%.4f", r.metrics.mcc) << " auc=" << fmt("%.4f", r.metrics.auc)
                   << " threshold=" << io::format_real(r.metrics.threshold) << '\n';
                return kExitOk;
            };
        });
    }
};

struct CompareCmd {
    std::vector<std::string> reports;
    bool csv = false;
    std::string out;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& os) {
        auto* cmd = app.add_subcommand("compare", "tabulate several reports and mark each column's maximum");
        cmd->add_option("reports", reports, "report JSON files")->required();
        cmd->add_flag("--csv", csv, "emit CSV instead of the aligned text table");
        cmd->add_option("--out", out, "write the table to this file instead of stdout");
        cmd->callback([this, &action, &os] {
            action = [this, &os] {
                std::vector<report::EvaluationReport> loaded;
                for (const auto& p : reports) {
                    loaded.push_back(report::load_report(p));
                }
                const auto table = report::compare_models(loaded);
                const std::string text = csv ? report::render_csv(table) : report::render_text(table);
                if (out.empty()) {
                    os << text;
                } else {
                    io::write_file_atomic(out, text);
                }
                return kExitOk;
            };
        });
    }
};

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"forgerykit: compression-difference forgery detection toolkit"};
    app.name("forgerykit");
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 success, 1 usage or invalid configuration, 2 invalid or unreadable data, 3 internal "
        "error.\nFORGERYKIT_SEED supplies the default --seed.");

    std::function<int()> action;
    SynthCmd synth;
    PrepareCmd prepare;
    TrainCmd train;
    ScoreCmd score;
    CalibrateCmd calibrate;
    EvaluateCmd evaluate;
    CompareCmd compare;
    synth.add(app, action, out);
    prepare.add(app, action, out, err);
    train.add(app, action, out);
    score.add(app, action, out);
    calibrate.add(app, action, out);
    evaluate.add(app, action, out);
    compare.add(app, action, out);

    try {
        std::vector<std::string> argv(args.rbegin(), args.rend());
        app.parse(std::move(argv));
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "forgerykit: error: " << one_line(e.what()) << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        // Flag, config-file and configuration validation failures; no work has started.
        err << "forgerykit: error: " << one_line(e.what()) << '\n';
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const Error& e) {
        err << "forgerykit: error: " << one_line(e.what()) << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "forgerykit: error: internal: " << one_line(e.what()) << '\n';
        return kExitInternal;
    }
}

}  // namespace forgerykit::cli
