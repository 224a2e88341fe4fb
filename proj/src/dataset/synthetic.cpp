#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "forgerykit/codec.hpp"
#include "forgerykit/dataset.hpp"
#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"
#include "forgerykit/rng.hpp"

namespace forgerykit::dataset {

namespace fs = std::filesystem;

namespace {

// Smooth scene: per-channel base level, linear ramp and two low-frequency
// waves, plus white noise standing in for sensor grain.
ImageTensor smooth_scene(int size, double noise_sigma, Rng& rng) {
    struct Wave {
        double fx, fy, phase, amp;
    };
    ImageTensor img(size, size, 3);
    for (int c = 0; c < 3; ++c) {
        const double base = rng.uniform(110.0, 145.0);
        const double gx = rng.uniform(-10.0, 10.0);
        const double gy = rng.uniform(-10.0, 10.0);
        Wave waves[2];
        for (auto& w : waves) {
            w = {rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0), rng.uniform(0.0, 2.0 * std::numbers::pi),
                 rng.uniform(2.0, 6.0)};
        }
        for (int y = 0; y < size; ++y) {
            const double v = static_cast<double>(y) / size;
            for (int x = 0; x < size; ++x) {
                const double u = static_cast<double>(x) / size;
                double val = base + gx * (u - 0.5) + gy * (v - 0.5);
                for (const auto& w : waves) {
                    val += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
                }
                val += noise_sigma * rng.normal();
                img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(val + 0.5), 0.0, 255.0));
            }
        }
    }
    return img;
}

std::string numbered(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%05d.png", prefix, i);
    return buf;
}

}  // namespace

Manifest generate_synthetic_dataset(int n_authentic, int n_tampered, int size, std::uint64_t seed,
                                    const fs::path& out, const SynthParams& params,
                                    std::map<std::string, PatchRect>* patches) {
    if (n_authentic < 1 || n_tampered < 1) {
        throw Error(ErrorKind::InvalidArgument, "synthetic dataset needs at least one image per class");
    }
    if (params.base_quality < 1 || params.base_quality > 100 || params.patch_quality < 0 ||
        params.patch_quality > 100 || !(params.noise_sigma >= 0.0) || !(params.patch_noise_sigma >= 0.0) ||
        !(params.min_patch_frac > 0.0 && params.min_patch_frac <= params.max_patch_frac &&
          params.max_patch_frac <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "invalid synthetic dataset parameters");
    }
    if (size < 16) {
        throw Error(ErrorKind::InvalidArgument, "synthetic image size must be at least 16");
    }
    const Layout layout;
    std::error_code ec;
    fs::create_directories(out / layout.authentic_dir, ec);
    fs::create_directories(out / layout.tampered_dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create " + out.string());
    }

    Manifest m;
    m.seed = seed;
    for (int i = 0; i < n_authentic; ++i) {
        Rng rng(mix_seed(seed, 2 * static_cast<std::uint64_t>(i)));
        const ImageTensor scene = smooth_scene(size, params.noise_sigma, rng);
        const ImageTensor img = codec::jpeg_roundtrip(scene, params.base_quality);
        const std::string id = layout.authentic_dir + "/" + numbered("au", i);
        io::write_file_atomic(out / id, codec::encode_png(img));
        m.records.push_back({id, Label::Authentic, Split::Unassigned});
    }
    for (int i = 0; i < n_tampered; ++i) {
        Rng rng(mix_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1));
        const ImageTensor scene = smooth_scene(size, params.noise_sigma, rng);
        ImageTensor img = codec::jpeg_roundtrip(scene, params.base_quality);
        ImageTensor donor = smooth_scene(size, params.patch_noise_sigma, rng);
        if (params.patch_quality > 0) {
            donor = codec::jpeg_roundtrip(donor, params.patch_quality);
        }

        PatchRect rect;
        rect.width = static_cast<int>(std::lround(size * rng.uniform(params.min_patch_frac, params.max_patch_frac)));
        rect.height = static_cast<int>(std::lround(size * rng.uniform(params.min_patch_frac, params.max_patch_frac)));
        rect.width = std::clamp(rect.width, 1, size);
        rect.height = std::clamp(rect.height, 1, size);
        rect.x = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - rect.width + 1)));
        rect.y = static_cast<int>(rng.below(static_cast<std::uint64_t>(size - rect.height + 1)));
        for (int y = rect.y; y < rect.y + rect.height; ++y) {
            for (int x = rect.x; x < rect.x + rect.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    img.at(x, y, c) = donor.at(x, y, c);
                }
            }
        }
        const std::string id = layout.tampered_dir + "/" + numbered("tp", i);
        io::write_file_atomic(out / id, codec::encode_png(img));
        m.records.push_back({id, Label::Tampered, Split::Unassigned});
        if (patches) {
            (*patches)[id] = rect;
        }
    }
    std::sort(m.records.begin(), m.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
    return m;
}

}  // namespace forgerykit::dataset
