#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace forgerykit::dataset {

enum class Label : int { Authentic = 0, Tampered = 1 };
enum class Split { Train, Validation, Test, Unassigned };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct SampleRecord {
    std::string id;  // path relative to the dataset root, '/'-separated
    Label label = Label::Authentic;
    Split split = Split::Unassigned;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Manifest {
    std::vector<SampleRecord> records;  // sorted by id
    std::uint64_t seed = 0;
    double split_ratio = 0.0;

    std::vector<SampleRecord> subset(Split split) const;
    std::size_t count(Split split) const;
    std::size_t count(Label label) const;
};

struct Layout {
    std::string authentic_dir = "Au";
    std::string tampered_dir = "Tp";
};

// One record per decodable .jpg/.jpeg/.png file (case-insensitive, not
// recursive) in each class directory. Undecodable files are skipped and
// their ids appended to `skipped` when provided.
Manifest scan_dataset(const std::filesystem::path& root, const Layout& layout = {},
                      std::vector<std::string>* skipped = nullptr);

// Per class: seeded shuffle, first round_half_up(ratio * n) records to
// Train, the rest to Test. Record order stays canonical.
Manifest stratified_split(const Manifest& m, double ratio, std::uint64_t seed);

// Three-way variant: Train gets round_half_up(train * n), Validation gets
// round_half_up(val * n), Test gets the remainder.
Manifest stratified_split(const Manifest& m, double train_ratio, double val_ratio, std::uint64_t seed);

// JSON Lines, one {"id","label","split"} object per line, LF-terminated.
std::string to_jsonl(const Manifest& m);
Manifest parse_jsonl(std::string_view text);
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

struct PatchRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

struct SynthParams {
    int base_quality = 90;            // compression history of every background
    int patch_quality = 0;            // donor compression history; 0 = never compressed
    double noise_sigma = 4.0;         // background sensor noise, in 8-bit levels
    double patch_noise_sigma = 40.0;  // donor sensor noise
    double min_patch_frac = 0.5;      // patch side as a fraction of the image side
    double max_patch_frac = 0.75;
};

// Writes PNG files under out/Au and out/Tp. Authentic images are smooth
// random scenes compressed once; tampered images additionally carry a
// rectangular patch pasted from a noisier source with a different
// compression history, so recompression leaves a residual there.
// Deterministic in `seed`. `patches`, when given, receives the pasted
// rectangle per tampered id.
Manifest generate_synthetic_dataset(int n_authentic, int n_tampered, int size, std::uint64_t seed,
                                    const std::filesystem::path& out, const SynthParams& params = {},
                                    std::map<std::string, PatchRect>* patches = nullptr);

}  // namespace forgerykit::dataset
