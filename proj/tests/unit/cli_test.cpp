#include <cstdlib>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "forgerykit/calibration.hpp"
#include "forgerykit/cli.hpp"
#include "forgerykit/dataset.hpp"
#include "forgerykit/io.hpp"
#include "forgerykit/nn.hpp"
#include "forgerykit/report.hpp"
#include "test_util.hpp"

using namespace forgerykit;
using fk_test::TempDir;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string p(const std::filesystem::path& path) { return path.string(); }

const std::filesystem::path kPublished = std::filesystem::path(FORGERYKIT_FIXTURES) / "published";

// Unsets FORGERYKIT_SEED for the test's lifetime.
class CliTest : public ::testing::Test {
protected:
    void SetUp() override { unsetenv("FORGERYKIT_SEED"); }
    void TearDown() override { unsetenv("FORGERYKIT_SEED"); }
};

}  // namespace

TEST(CliConfig, ParsesSectionsStringsAndComments) {
    const auto c = cli::parse_config(
        "# run settings\n"
        "[run]\n"
        "seed = 7   # trailing comment\n"
        "\n"
        "[preprocess]\n"
        "input_mode = \"fdiff # not a comment\"\n"
        "jpeg_quality=85\n"
        "[split]\n"
        "replication_split = true\n");
    EXPECT_EQ(c.size(), 4u);
    EXPECT_EQ(c.at("run.seed"), "7");
    EXPECT_EQ(c.at("preprocess.input_mode"), "fdiff # not a comment");
    EXPECT_EQ(c.at("preprocess.jpeg_quality"), "85");
    EXPECT_EQ(c.at("split.replication_split"), "true");
}

TEST(CliConfig, RejectsMalformedInput) {
    EXPECT_FK_ERROR(cli::parse_config("[run\nseed = 1\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(cli::parse_config("seed\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(cli::parse_config("seed = \"open\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(cli::parse_config("a = 1\na = 2\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(cli::parse_config("bad key = 1\n"), ErrorKind::ParseError);
}

TEST_F(CliTest, UsageErrorsExitOne) {
    EXPECT_EQ(run({}).code, cli::kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
    const auto r = run({"synth", "--n-authentic", "2", "--bogus"});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_EQ(r.err.rfind("forgerykit: error: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
    EXPECT_EQ(run({"evaluate", "--scores", "s.csv", "--out", "r.json", "--averaging", "micro"}).code,
              cli::kExitUsage);
    EXPECT_EQ(run({"calibrate", "--scores", "s.csv", "--out", "c.json", "--fixed-threshold", "2"}).code,
              cli::kExitUsage);
    EXPECT_EQ(run({"evaluate", "--scores", "s.csv", "--out", "r.json", "--fixed-threshold", "0.5", "--calibration",
                   "c.json"})
                  .code,
              cli::kExitUsage);
}

TEST_F(CliTest, HelpDocumentsExitCodesAndSeed) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("Exit codes"), std::string::npos);
    EXPECT_NE(r.out.find("FORGERYKIT_SEED"), std::string::npos);
    for (const char* cmd : {"synth", "prepare", "train", "score", "calibrate", "evaluate", "compare"}) {
        EXPECT_NE(r.out.find(cmd), std::string::npos) << cmd;
        EXPECT_EQ(run({cmd, "--help"}).code, cli::kExitOk) << cmd;
    }
}

TEST_F(CliTest, DataErrorsExitTwo) {
    TempDir dir("cli_data");
    io::write_file_atomic(dir / "bad.csv", std::string("id,label,score\na,1,1.5\n"));
    auto r = run({"calibrate", "--scores", p(dir / "bad.csv"), "--out", p(dir / "c.json")});
    EXPECT_EQ(r.code, cli::kExitData);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
    EXPECT_FALSE(std::filesystem::exists(dir / "c.json"));
    r = run({"evaluate", "--scores", p(dir / "absent.csv"), "--out", p(dir / "r.json")});
    EXPECT_EQ(r.code, cli::kExitData);
    r = run({"prepare", "--root", p(dir / "nowhere"), "--out", p(dir / "m.jsonl")});
    EXPECT_EQ(r.code, cli::kExitData);
}

TEST_F(CliTest, ConfigFileFeedsOptionsAndFlagsWin) {
    TempDir dir("cli_config");
    io::write_file_atomic(dir / "run.toml", std::string("[run]\nseed = 5\n[synth]\nn_authentic = 3\nn_tampered = 2\n"
                                                        "size = 16\n"));
    auto r = run({"synth", "--config", p(dir / "run.toml"), "--out", p(dir / "a")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "authentic=3 tampered=2\n");
    r = run({"synth", "--config", p(dir / "run.toml"), "--n-tampered", "4", "--out", p(dir / "b")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "authentic=3 tampered=4\n");

    io::write_file_atomic(dir / "bad.toml", std::string("[run]\nflavour = 1\n"));
    r = run({"synth", "--config", p(dir / "bad.toml"), "--out", p(dir / "c")});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find("run.flavour"), std::string::npos) << r.err;
}

TEST_F(CliTest, SeedPrecedenceIsFlagThenConfigThenEnvironment) {
    TempDir dir("cli_seed");
    auto synth = [&](const std::string& name, std::vector<std::string> extra) {
        std::vector<std::string> args{"synth", "--n-authentic", "2", "--n-tampered", "2", "--size", "16",
                                      "--out", p(dir / name)};
        args.insert(args.end(), extra.begin(), extra.end());
        EXPECT_EQ(run(args).code, 0);
        return io::read_file(dir / name / "Tp" / "tp_00000.png");
    };
    const auto seed3 = synth("flag3", {"--seed", "3"});
    const auto seed4 = synth("flag4", {"--seed", "4"});
    ASSERT_NE(seed3, seed4);
    setenv("FORGERYKIT_SEED", "3", 1);
    EXPECT_EQ(synth("env3", {}), seed3);
    EXPECT_EQ(synth("env_flag4", {"--seed", "4"}), seed4);
    io::write_file_atomic(dir / "seed4.toml", std::string("[run]\nseed = 4\n"));
    EXPECT_EQ(synth("env_cfg4", {"--config", p(dir / "seed4.toml")}), seed4);
}

TEST_F(CliTest, EndToEndOnFortyImages) {
    TempDir dir("cli_e2e");
    const auto data = dir / "data";
    ASSERT_EQ(run({"synth", "--n-authentic", "20", "--n-tampered", "20", "--size", "32", "--seed", "1", "--out",
                   p(data)})
                  .code,
              0);
    auto r = run({"prepare", "--root", p(data), "--seed", "1", "--out", p(dir / "split.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "train=28 val=4 test=8 skipped=0\n");

    r = run({"train", "--manifest", p(dir / "split.jsonl"), "--data-root", p(data), "--out", p(dir / "m.fkm"),
             "--size", "32", "--max-epochs", "3", "--patience", "3", "--learning-rate", "1e-3", "--jobs", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    int epoch_lines = 0;
    while (std::getline(lines, line)) {
        if (line.rfind("epoch=", 0) == 0) {
            ++epoch_lines;
            EXPECT_NE(line.find(" train_loss="), std::string::npos) << line;
            EXPECT_NE(line.find(" val_loss="), std::string::npos) << line;
            EXPECT_NE(line.find(" improved="), std::string::npos) << line;
        }
    }
    EXPECT_EQ(epoch_lines, 3);

    r = run({"score", "--model", p(dir / "m.fkm"), "--manifest", p(dir / "split.jsonl"), "--split", "test",
             "--data-root", p(data), "--out", p(dir / "s.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(run({"calibrate", "--scores", p(dir / "s.csv"), "--model-id", "tiny", "--out", p(dir / "c.json")}).code,
              0);
    r = run({"evaluate", "--scores", p(dir / "s.csv"), "--calibration", p(dir / "c.json"), "--model",
             p(dir / "m.fkm"), "--out", p(dir / "r.json"), "--roc-csv", p(dir / "roc.csv"), "--confusion-csv",
             p(dir / "cm.csv")});
    ASSERT_EQ(r.code, 0) << r.err;

    const auto rep = report::load_report(dir / "r.json");
    EXPECT_EQ(rep.model_id, "tiny");
    EXPECT_EQ(rep.confusion.total(), 8);
    EXPECT_EQ(rep.calibration, calibration::load_calibration(dir / "c.json"));
    EXPECT_EQ(rep.dataset_digest, report::dataset_digest(calibration::load_scores(dir / "s.csv")));
    auto echo = [&](const std::string& key) {
        for (const auto& [k, v] : rep.config_echo) {
            if (k == key) {
                return v;
            }
        }
        return std::string("<missing>");
    };
    EXPECT_EQ(echo("averaging"), "weighted");
    EXPECT_EQ(echo("input_mode"), "hybrid");
    EXPECT_EQ(echo("jpeg_quality"), "90");
    EXPECT_EQ(io::read_text(dir / "roc.csv").rfind("threshold,fpr,tpr\ninf,0,0\n", 0), 0u);
    EXPECT_EQ(io::read_text(dir / "cm.csv"), report::export_confusion(rep.confusion));

    // Idempotence: repeating a command reproduces its output bytes.
    ASSERT_EQ(run({"score", "--model", p(dir / "m.fkm"), "--manifest", p(dir / "split.jsonl"), "--split", "test",
                   "--data-root", p(data), "--out", p(dir / "s2.csv"), "--jobs", "3"})
                  .code,
              0);
    EXPECT_EQ(io::read_file(dir / "s.csv"), io::read_file(dir / "s2.csv"));
    ASSERT_EQ(run({"train", "--manifest", p(dir / "split.jsonl"), "--data-root", p(data), "--out",
                   p(dir / "m2.fkm"), "--size", "32", "--max-epochs", "3", "--patience", "3", "--learning-rate",
                   "1e-3"})
                  .code,
              0);
    EXPECT_EQ(io::read_file(dir / "m.fkm"), io::read_file(dir / "m2.fkm"));

    // Calibrated J is never below the J of the fixed 0.5 threshold.
    ASSERT_EQ(run({"evaluate", "--scores", p(dir / "s.csv"), "--fixed-threshold", "0.5", "--out",
                   p(dir / "fixed.json")})
                  .code,
              0);
    const auto fixed = report::load_report(dir / "fixed.json");
    EXPECT_EQ(fixed.metrics.threshold, 0.5);
    EXPECT_GE(rep.calibration.youden_j, fixed.calibration.youden_j);

    // Scoring a split the manifest does not have is a data error.
    EXPECT_EQ(run({"score", "--model", p(dir / "m.fkm"), "--manifest", p(dir / "split.jsonl"), "--split", "unassigned",
                   "--data-root", p(data), "--out", p(dir / "s3.csv")})
                  .code,
              cli::kExitData);
}

TEST_F(CliTest, CompareOverPublishedFixtures) {
    std::vector<std::string> args{"compare"};
    for (const char* m : {"DenseNet121", "VGG16", "ResNet50", "EfficientNetB0", "MobileNet", "InceptionV3"}) {
        args.push_back(p(kPublished / (std::string(m) + ".json")));
    }
    auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    auto row = [&](const std::string& model) {
        const auto at = r.out.find("\n" + model + " ");
        return at == std::string::npos ? std::string() : r.out.substr(at + 1, r.out.find('\n', at + 1) - at - 1);
    };
    EXPECT_NE(row("DenseNet121").find("0.784*"), std::string::npos) << r.out;
    EXPECT_NE(row("DenseNet121").find("0.841*"), std::string::npos) << r.out;
    EXPECT_NE(row("ResNet50").find("0.598*"), std::string::npos) << r.out;
    EXPECT_EQ(row("VGG16").find('*'), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("threshold range: [0.338, 0.461]"), std::string::npos) << r.out;

    args.push_back("--csv");
    r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("model_id,accuracy,", 0), 0u) << r.out;
    EXPECT_EQ(run({"compare"}).code, cli::kExitUsage);
}
