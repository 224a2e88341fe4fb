#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "forgerykit/codec.hpp"
#include "forgerykit/dataset.hpp"
#include "forgerykit/io.hpp"
#include "test_util.hpp"

using namespace forgerykit;
using dataset::Label;
using dataset::Split;
using fk_test::TempDir;

namespace {

void write_png(const std::filesystem::path& p, std::uint8_t v) {
    io::write_file_atomic(p, codec::encode_png(ImageTensor(4, 4, 3, v)));
}

dataset::Manifest make_manifest(int n_auth, int n_tamp) {
    dataset::Manifest m;
    for (int i = 0; i < n_auth; ++i) m.records.push_back({"Au/a" + std::to_string(1000 + i), Label::Authentic, Split::Unassigned});
    for (int i = 0; i < n_tamp; ++i) m.records.push_back({"Tp/t" + std::to_string(1000 + i), Label::Tampered, Split::Unassigned});
    return m;
}

std::size_t count(const dataset::Manifest& m, Label l, Split s) {
    std::size_t n = 0;
    for (const auto& r : m.records) n += (r.label == l && r.split == s) ? 1 : 0;
    return n;
}

}  // namespace

TEST(Scan, CountsAndLabelsByDirectory) {
    TempDir dir("scan");
    std::filesystem::create_directories(dir / "Au");
    std::filesystem::create_directories(dir / "Tp");
    write_png(dir / "Au/b.png", 1);
    write_png(dir / "Au/a.PNG", 2);
    io::write_file_atomic(dir / "Au/c.jpg", codec::encode_jpeg(ImageTensor(8, 8, 3, 9), 90));
    write_png(dir / "Tp/x.png", 3);
    write_png(dir / "Tp/y.png", 4);
    io::write_file_atomic(dir / "Tp/notes.txt", std::string_view("not an image"));
    io::write_file_atomic(dir / "Tp/broken.jpg", std::string_view("\xFF\xD8\xFF garbage"));
    std::filesystem::create_directories(dir / "Tp/nested");
    write_png(dir / "Tp/nested/z.png", 5);

    std::vector<std::string> skipped;
    const auto m = dataset::scan_dataset(dir.path(), {}, &skipped);
    ASSERT_EQ(m.records.size(), 5u);
    EXPECT_EQ(m.count(Label::Authentic), 3u);
    EXPECT_EQ(m.count(Label::Tampered), 2u);
    EXPECT_EQ(m.records[0].id, "Au/a.PNG");
    EXPECT_EQ(skipped, std::vector<std::string>{"Tp/broken.jpg"});
    for (std::size_t i = 1; i < m.records.size(); ++i) EXPECT_LT(m.records[i - 1].id, m.records[i].id);
    for (const auto& r : m.records) {
        EXPECT_EQ(r.split, Split::Unassigned);
        EXPECT_EQ(r.label, r.id.starts_with("Au/") ? Label::Authentic : Label::Tampered);
    }
}

TEST(Scan, EmptyClassAndMissingDirectory) {
    TempDir dir("scan_empty");
    std::filesystem::create_directories(dir / "Au");
    EXPECT_FK_ERROR(dataset::scan_dataset(dir.path()), ErrorKind::MissingDirectory);
    std::filesystem::create_directories(dir / "Tp");
    write_png(dir / "Au/a.png", 1);
    EXPECT_FK_ERROR(dataset::scan_dataset(dir.path()), ErrorKind::EmptyClass);
}

TEST(Scan, CustomLayoutAndDeterminism) {
    TempDir dir("scan_layout");
    std::filesystem::create_directories(dir / "real");
    std::filesystem::create_directories(dir / "fake");
    for (int i = 0; i < 3; ++i) write_png(dir / ("real/r" + std::to_string(i) + ".png"), 10);
    for (int i = 0; i < 2; ++i) write_png(dir / ("fake/f" + std::to_string(i) + ".jpeg.png"), 20);
    const dataset::Layout layout{"real", "fake"};
    const auto a = dataset::to_jsonl(dataset::scan_dataset(dir.path(), layout));
    const auto b = dataset::to_jsonl(dataset::scan_dataset(dir.path(), layout));
    EXPECT_EQ(a, b);
    EXPECT_EQ(dataset::scan_dataset(dir.path(), layout).records.size(), 5u);
}

TEST(Split, SixtyFortyAtEightyPercent) {
    const auto m = dataset::stratified_split(make_manifest(60, 40), 0.8, 42);
    EXPECT_EQ(count(m, Label::Authentic, Split::Train), 48u);
    EXPECT_EQ(count(m, Label::Tampered, Split::Train), 32u);
    EXPECT_EQ(count(m, Label::Authentic, Split::Test), 12u);
    EXPECT_EQ(count(m, Label::Tampered, Split::Test), 8u);
    EXPECT_EQ(m.split_ratio, 0.8);
    EXPECT_EQ(m.seed, 42u);
}

TEST(Split, DeterministicAndSeedSensitive) {
    const auto base = make_manifest(30, 30);
    const auto a = dataset::stratified_split(base, 0.8, 7);
    const auto b = dataset::stratified_split(base, 0.8, 7);
    const auto c = dataset::stratified_split(base, 0.8, 8);
    EXPECT_EQ(a.records, b.records);
    EXPECT_NE(a.records, c.records);
    // Canonical order is preserved.
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].id, base.records[i].id);
}

TEST(Split, TwoPlusTwoAtHalf) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = dataset::stratified_split(make_manifest(2, 2), 0.5, seed);
        for (auto l : {Label::Authentic, Label::Tampered}) {
            EXPECT_EQ(count(m, l, Split::Train), 1u);
            EXPECT_EQ(count(m, l, Split::Test), 1u);
        }
    }
}

TEST(Split, StratificationBoundAndPartition) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int na = 2 + static_cast<int>(rng.below(60));
        const int nt = 2 + static_cast<int>(rng.below(60));
        const double ratio = rng.uniform(0.05, 0.95);
        dataset::Manifest m;
        try {
            m = dataset::stratified_split(make_manifest(na, nt), ratio, trial);
        } catch (const Error& e) {
            // Only legal when rounding empties one side of a class.
            EXPECT_EQ(e.kind(), ErrorKind::DegenerateClass);
            const auto fa = std::floor(ratio * na + 0.5), ft = std::floor(ratio * nt + 0.5);
            EXPECT_TRUE(fa == 0 || fa == na || ft == 0 || ft == nt);
            continue;
        }
        for (auto [l, n] : {std::pair{Label::Authentic, na}, {Label::Tampered, nt}}) {
            const double frac = static_cast<double>(count(m, l, Split::Train)) / n;
            EXPECT_LE(std::fabs(frac - ratio), 1.0 / n + 1e-12);
            EXPECT_EQ(count(m, l, Split::Train) + count(m, l, Split::Test), static_cast<std::size_t>(n));
        }
        EXPECT_EQ(m.count(Split::Unassigned), 0u);
        EXPECT_EQ(m.count(Split::Validation), 0u);
    }
}

TEST(Split, RoundHalfUp) {
    // 0.5 * 5 = 2.5 -> 3 train.
    const auto m = dataset::stratified_split(make_manifest(5, 5), 0.5, 1);
    EXPECT_EQ(count(m, Label::Authentic, Split::Train), 3u);
}

TEST(Split, DegenerateAndInvalid) {
    EXPECT_FK_ERROR(dataset::stratified_split(make_manifest(1, 5), 0.5, 1), ErrorKind::DegenerateClass);
    EXPECT_FK_ERROR(dataset::stratified_split(make_manifest(5, 5), 0.99, 1), ErrorKind::DegenerateClass);
    EXPECT_FK_ERROR(dataset::stratified_split(make_manifest(5, 5), 0.0, 1), ErrorKind::InvalidArgument);
    EXPECT_FK_ERROR(dataset::stratified_split(make_manifest(5, 5), 1.0, 1), ErrorKind::InvalidArgument);
    EXPECT_FK_ERROR(dataset::stratified_split(make_manifest(10, 10), 0.7, 0.4, 1), ErrorKind::InvalidArgument);
}

TEST(Split, ThreeWay) {
    const auto m = dataset::stratified_split(make_manifest(100, 100), 0.7, 0.1, 5);
    for (auto l : {Label::Authentic, Label::Tampered}) {
        EXPECT_EQ(count(m, l, Split::Train), 70u);
        EXPECT_EQ(count(m, l, Split::Validation), 10u);
        EXPECT_EQ(count(m, l, Split::Test), 20u);
    }
}

TEST(Manifest, JsonlGoldenAndRoundTrip) {
    dataset::Manifest m;
    m.records = {{"Au/a.png", Label::Authentic, Split::Train},
                 {"Tp/b.png", Label::Tampered, Split::Validation},
                 {"Tp/c.png", Label::Tampered, Split::Test}};
    const std::string text = dataset::to_jsonl(m);
    EXPECT_EQ(text,
              "{\"id\":\"Au/a.png\",\"label\":0,\"split\":\"train\"}\n"
              "{\"id\":\"Tp/b.png\",\"label\":1,\"split\":\"val\"}\n"
              "{\"id\":\"Tp/c.png\",\"label\":1,\"split\":\"test\"}\n");
    EXPECT_EQ(dataset::parse_jsonl(text).records, m.records);

    TempDir dir("manifest");
    dataset::save_manifest(m, dir / "m.jsonl");
    EXPECT_EQ(dataset::load_manifest(dir / "m.jsonl").records, m.records);
    EXPECT_EQ(io::read_text(dir / "m.jsonl"), text);
}

TEST(Manifest, ParseErrors) {
    EXPECT_FK_ERROR(dataset::parse_jsonl("{\"id\":\"a\",\"label\":0}\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(dataset::parse_jsonl("not json\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(dataset::parse_jsonl("{\"id\":\"a\",\"label\":2,\"split\":\"train\"}\n"), ErrorKind::RangeError);
    EXPECT_FK_ERROR(dataset::parse_jsonl("{\"id\":\"a\",\"label\":0,\"split\":\"dev\"}\n"), ErrorKind::ParseError);
    EXPECT_FK_ERROR(dataset::parse_jsonl("{\"id\":\"a\",\"label\":0,\"split\":\"train\"}\n"
                                         "{\"id\":\"a\",\"label\":1,\"split\":\"test\"}\n"),
                    ErrorKind::DuplicateId);
    try {
        dataset::parse_jsonl("{\"id\":\"a\",\"label\":0,\"split\":\"train\"}\nbad\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
    EXPECT_FK_ERROR(dataset::load_manifest("/nonexistent/m.jsonl"), ErrorKind::MissingFile);
}

TEST(Manifest, ParseSortsIntoCanonicalOrder) {
    const auto m = dataset::parse_jsonl("{\"id\":\"b\",\"label\":1,\"split\":\"test\"}\n"
                                        "{\"id\":\"a\",\"label\":0,\"split\":\"train\"}\n");
    ASSERT_EQ(m.records.size(), 2u);
    EXPECT_EQ(m.records[0].id, "a");
}

TEST(Synthetic, CountsAndFiles) {
    TempDir dir("synth");
    const auto m = dataset::generate_synthetic_dataset(10, 10, 64, 1, dir.path());
    EXPECT_EQ(m.records.size(), 20u);
    EXPECT_EQ(m.count(Label::Authentic), 10u);
    EXPECT_EQ(m.count(Label::Tampered), 10u);
    std::size_t files = 0;
    for (const auto& sub : {"Au", "Tp"}) {
        for (const auto& e : std::filesystem::directory_iterator(dir / sub)) {
            (void)e;
            ++files;
        }
    }
    EXPECT_EQ(files, 20u);
    const auto scanned = dataset::scan_dataset(dir.path());
    EXPECT_EQ(scanned.records, m.records);
    const auto img = codec::load_image(dir / m.records.front().id);
    EXPECT_EQ(img.width, 64);
    EXPECT_EQ(img.height, 64);
}

TEST(Synthetic, ByteIdenticalAcrossRuns) {
    TempDir a("synth_a");
    TempDir b("synth_b");
    const auto ma = dataset::generate_synthetic_dataset(4, 4, 32, 9, a.path());
    dataset::generate_synthetic_dataset(4, 4, 32, 9, b.path());
    for (const auto& r : ma.records) {
        EXPECT_EQ(io::read_file(a / r.id), io::read_file(b / r.id)) << r.id;
    }
}

TEST(Synthetic, PatchCarriesTheCompressionResidual) {
    TempDir dir("synth_patch");
    std::map<std::string, dataset::PatchRect> patches;
    const auto m = dataset::generate_synthetic_dataset(2, 12, 64, 4, dir.path(), {}, &patches);
    ASSERT_EQ(patches.size(), 12u);
    double inside = 0.0, outside = 0.0;
    for (const auto& [id, rect] : patches) {
        const auto img = codec::load_image(dir / id);
        const auto d = codec::compute_fdiff(img, codec::jpeg_roundtrip(img, 90));
        double si = 0.0, so = 0.0;
        int ni = 0, no = 0;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                const bool in = x >= rect.x && x < rect.x + rect.width && y >= rect.y && y < rect.y + rect.height;
                for (int c = 0; c < 3; ++c) {
                    (in ? si : so) += std::fabs(d.at(x, y, c));
                    (in ? ni : no) += 1;
                }
            }
        }
        inside += si / ni;
        outside += no > 0 ? so / no : 0.0;
    }
    EXPECT_GT(inside / 12, outside / 12);
}

TEST(Synthetic, InvalidArguments) {
    TempDir dir("synth_bad");
    EXPECT_FK_ERROR(dataset::generate_synthetic_dataset(0, 1, 64, 1, dir.path()), ErrorKind::InvalidArgument);
    EXPECT_FK_ERROR(dataset::generate_synthetic_dataset(1, 1, 15, 1, dir.path()), ErrorKind::InvalidArgument);
}
