#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forgerykit/codec.hpp"
#include "forgerykit/dataset.hpp"
#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"
#include "forgerykit/rng.hpp"

namespace forgerykit::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split split) noexcept {
    switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
    }
    return "unassigned";
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "val") return Split::Validation;
    if (text == "test") return Split::Test;
    if (text == "unassigned") return Split::Unassigned;
    throw Error(ErrorKind::ParseError, "unknown split '" + std::string(text) + "'");
}

std::vector<SampleRecord> Manifest::subset(Split split) const {
    std::vector<SampleRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [split](const SampleRecord& r) { return r.split == split; });
    return out;
}

std::size_t Manifest::count(Split split) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [split](const SampleRecord& r) { return r.split == split; }));
}

std::size_t Manifest::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [label](const SampleRecord& r) { return r.label == label; }));
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

void scan_class(const fs::path& root, const std::string& dir, Label label, std::vector<SampleRecord>& out,
                std::vector<std::string>* skipped) {
    const fs::path full = root / dir;
    if (!fs::is_directory(full)) {
        throw Error(ErrorKind::MissingDirectory, full.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(full)) {
        if (entry.is_regular_file() && has_image_extension(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::size_t added = 0;
    for (const auto& file : files) {
        const std::string id = (fs::path(dir) / file.filename()).generic_string();
        try {
            codec::decode_image(io::read_file(file));
        } catch (const Error&) {
            if (skipped) {
                skipped->push_back(id);
            }
            continue;
        }
        out.push_back({id, label, Split::Unassigned});
        ++added;
    }
    if (added == 0) {
        throw Error(ErrorKind::EmptyClass, "no decodable images in " + full.string());
    }
}

void sort_canonical(std::vector<SampleRecord>& records) {
    std::sort(records.begin(), records.end(), [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
}

std::size_t round_half_up(double x) {
    // The epsilon absorbs representation error such as 0.7 * 5 = 3.4999999999999996.
    return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

Manifest split_impl(const Manifest& m, double train_ratio, double val_ratio, std::uint64_t seed) {
    Manifest out = m;
    out.seed = seed;
    out.split_ratio = train_ratio;
    const bool three_way = val_ratio > 0.0;

    for (Label label : {Label::Authentic, Label::Tampered}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.records.size(); ++i) {
            if (out.records[i].label == label) {
                idx.push_back(i);
            }
        }
        const std::size_t n = idx.size();
        if (n < 2) {
            throw Error(ErrorKind::DegenerateClass, "each class needs at least 2 records");
        }
        const std::size_t n_train = round_half_up(train_ratio * static_cast<double>(n));
        const std::size_t n_val = three_way ? round_half_up(val_ratio * static_cast<double>(n)) : 0;
        if (n_train == 0 || n_train + n_val >= n || (three_way && n_val == 0)) {
            throw Error(ErrorKind::DegenerateClass, "split ratio leaves a class with an empty partition");
        }
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t k = 0; k < n; ++k) {
            Split s = Split::Test;
            if (k < n_train) {
                s = Split::Train;
            } else if (k < n_train + n_val) {
                s = Split::Validation;
            }
            out.records[idx[k]].split = s;
        }
    }
    return out;
}

}  // namespace

Manifest scan_dataset(const fs::path& root, const Layout& layout, std::vector<std::string>* skipped) {
    if (!fs::is_directory(root)) {
        throw Error(ErrorKind::MissingDirectory, root.string());
    }
    for (const auto& dir : {layout.authentic_dir, layout.tampered_dir}) {
        if (!fs::is_directory(root / dir)) {
            throw Error(ErrorKind::MissingDirectory, (root / dir).string());
        }
    }
    Manifest m;
    scan_class(root, layout.authentic_dir, Label::Authentic, m.records, skipped);
    scan_class(root, layout.tampered_dir, Label::Tampered, m.records, skipped);
    sort_canonical(m.records);
    return m;
}

Manifest stratified_split(const Manifest& m, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "split ratio must lie in (0, 1)");
    }
    return split_impl(m, ratio, 0.0, seed);
}

Manifest stratified_split(const Manifest& m, double train_ratio, double val_ratio, std::uint64_t seed) {
    if (!(train_ratio > 0.0 && val_ratio > 0.0 && train_ratio + val_ratio < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "train and val ratios must be positive and sum below 1");
    }
    return split_impl(m, train_ratio, val_ratio, seed);
}

std::string to_jsonl(const Manifest& m) {
    std::string out;
    for (const auto& r : m.records) {
        out += "{\"id\":";
        out += json(r.id).dump();
        out += ",\"label\":";
        out += std::to_string(static_cast<int>(r.label));
        out += ",\"split\":\"";
        out += to_string(r.split);
        out += "\"}\n";
    }
    return out;
}

Manifest parse_jsonl(std::string_view text) {
    Manifest m;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string where = "manifest line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ParseError, where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("label") || !j.contains("split") ||
            !j["id"].is_string() || !j["label"].is_number_integer() || !j["split"].is_string()) {
            throw Error(ErrorKind::ParseError, where + ": expected {id, label, split}");
        }
        const auto label = j["label"].get<int>();
        if (label != 0 && label != 1) {
            throw Error(ErrorKind::RangeError, where + ": label must be 0 or 1");
        }
        SampleRecord r{j["id"].get<std::string>(), static_cast<Label>(label), parse_split(j["split"].get<std::string>())};
        if (!seen.insert(r.id).second) {
            throw Error(ErrorKind::DuplicateId, where + ": " + r.id);
        }
        m.records.push_back(std::move(r));
    }
    sort_canonical(m.records);
    return m;
}

Manifest load_manifest(const fs::path& path) {
    return parse_jsonl(io::read_text(path));
}

void save_manifest(const Manifest& m, const fs::path& path) {
    io::write_file_atomic(path, to_jsonl(m));
}

}  // namespace forgerykit::dataset
