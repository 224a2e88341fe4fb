#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "forgerykit/io.hpp"
#include "test_util.hpp"

using namespace forgerykit;
using fk_test::TempDir;

TEST(Io, FormatRealRoundTrips) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(80)) - 40);
        double back = 0.0;
        ASSERT_TRUE(io::parse_real(io::format_real(v), back));
        ASSERT_EQ(back, v);
    }
    EXPECT_EQ(io::format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_real(0.75), "0.75");
    EXPECT_EQ(io::format_real(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(io::format_real(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Io, FormatFixed) {
    EXPECT_EQ(io::format_fixed(0.7846, 3), "0.785");
    EXPECT_EQ(io::format_fixed(0.5, 3), "0.500");
}

TEST(Io, ParseRejectsGarbage) {
    double d = 0.0;
    long long n = 0;
    EXPECT_TRUE(io::parse_real("inf", d));
    EXPECT_TRUE(std::isinf(d));
    EXPECT_TRUE(io::parse_real("1e-3", d));
    EXPECT_EQ(d, 1e-3);
    EXPECT_FALSE(io::parse_real("", d));
    EXPECT_FALSE(io::parse_real("0.5x", d));
    EXPECT_FALSE(io::parse_real(" 0.5", d));
    EXPECT_TRUE(io::parse_int("-12", n));
    EXPECT_EQ(n, -12);
    EXPECT_FALSE(io::parse_int("1.0", n));
    EXPECT_FALSE(io::parse_int("", n));
}

TEST(Io, Sha256KnownVectors) {
    EXPECT_EQ(io::sha256_hex(std::string_view("")),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(io::sha256_hex(std::string_view("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, AtomicWriteReplacesAndLeavesNoTemporaries) {
    TempDir dir("io");
    io::write_file_atomic(dir / "f.txt", std::string_view("first"));
    io::write_file_atomic(dir / "f.txt", std::string_view("second"));
    EXPECT_EQ(io::read_text(dir / "f.txt"), "second");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) {
        ++entries;
    }
    EXPECT_EQ(entries, 1);
    EXPECT_FK_ERROR(io::read_file(dir / "absent"), ErrorKind::MissingFile);
    // Missing parent directories are created; a file in the way is a failure.
    io::write_file_atomic(dir / "sub" / "g.txt", std::string_view("x"));
    EXPECT_EQ(io::read_text(dir / "sub" / "g.txt"), "x");
    EXPECT_FK_ERROR(io::write_file_atomic(dir / "f.txt" / "g.txt", std::string_view("x")), ErrorKind::IoFailure);
}
