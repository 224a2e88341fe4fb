#include "forgerykit/codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "codec_internal.hpp"
#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"

namespace forgerykit::codec {

std::string_view to_string(InputMode mode) noexcept {
    switch (mode) {
    case InputMode::RgbOnly: return "rgb";
    case InputMode::FdiffOnly: return "fdiff";
    case InputMode::Hybrid: return "hybrid";
    }
    return "hybrid";
}

InputMode parse_input_mode(std::string_view text) {
    if (text == "rgb") return InputMode::RgbOnly;
    if (text == "fdiff") return InputMode::FdiffOnly;
    if (text == "hybrid") return InputMode::Hybrid;
    throw Error(ErrorKind::InvalidArgument, "input mode must be rgb|fdiff|hybrid, got '" + std::string(text) + "'");
}

std::string_view to_string(ChromaSubsampling s) noexcept {
    return s == ChromaSubsampling::S420 ? "420" : "444";
}

ChromaSubsampling parse_subsampling(std::string_view text) {
    if (text == "420") return ChromaSubsampling::S420;
    if (text == "444") return ChromaSubsampling::S444;
    throw Error(ErrorKind::InvalidArgument, "subsampling must be 420|444, got '" + std::string(text) + "'");
}

int channels_for(InputMode mode) noexcept {
    return mode == InputMode::Hybrid ? 6 : 3;
}

void PreprocessConfig::validate() const {
    if (jpeg_quality < 1 || jpeg_quality > 100) {
        throw Error(ErrorKind::InvalidArgument, "jpeg_quality must be in [1, 100]");
    }
    if (target_width < 8 || target_height < 8) {
        throw Error(ErrorKind::InvalidArgument, "target size must be at least 8x8");
    }
}

namespace {

bool is_jpeg(std::span<const std::uint8_t> b) {
    return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

bool is_png(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

void require_same_shape(const RealTensor& a, const ImageTensor& b, const char* what) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(ErrorKind::ShapeMismatch, what);
    }
}

}  // namespace

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
    if (is_jpeg(bytes)) {
        return detail::decode_jpeg(bytes);
    }
    if (is_png(bytes)) {
        return detail::decode_png(bytes);
    }
    throw Error(ErrorKind::UnsupportedFormat, "not a JPEG or PNG stream");
}

ImageTensor load_image(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    try {
        return decode_image(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_jpeg(const ImageTensor& img, int quality, ChromaSubsampling subsampling) {
    if (quality < 1 || quality > 100) {
        throw Error(ErrorKind::InvalidArgument, "jpeg quality must be in [1, 100]");
    }
    return detail::encode_jpeg(img, quality, subsampling == ChromaSubsampling::S420);
}

std::vector<std::uint8_t> encode_png(const ImageTensor& img) {
    return detail::encode_png(img);
}

ImageTensor resize_bilinear(const ImageTensor& img, int target_width, int target_height) {
    if (target_width < 1 || target_height < 1 || img.width < 1 || img.height < 1) {
        throw Error(ErrorKind::InvalidArgument, "resize needs positive dimensions");
    }
    if (target_width == img.width && target_height == img.height) {
        return img;
    }

    struct Tap {
        int i0, i1;
        double frac;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> t(static_cast<std::size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int o = 0; o < out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, in - 1);
            t[static_cast<std::size_t>(o)] = {i0, i1, src - i0};
        }
        return t;
    };
    const auto xs = taps(img.width, target_width);
    const auto ys = taps(img.height, target_height);

    ImageTensor out(target_width, target_height, img.channels);
    for (int y = 0; y < target_height; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < target_width; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < img.channels; ++c) {
                const double top = img.at(tx.i0, ty.i0, c) * (1.0 - tx.frac) + img.at(tx.i1, ty.i0, c) * tx.frac;
                const double bot = img.at(tx.i0, ty.i1, c) * (1.0 - tx.frac) + img.at(tx.i1, ty.i1, c) * tx.frac;
                const double v = top * (1.0 - ty.frac) + bot * ty.frac;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
            }
        }
    }
    return out;
}

ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality, ChromaSubsampling subsampling) {
    const auto encoded = encode_jpeg(img, quality, subsampling);
    ImageTensor decoded = detail::decode_jpeg(encoded);
    if (!decoded.same_shape(img)) {
        throw Error(ErrorKind::EncodeFailure, "round-trip changed the image shape");
    }
    return decoded;
}

DiffTensor compute_fdiff(const ImageTensor& f, const ImageTensor& f_comp) {
    if (!f.same_shape(f_comp)) {
        throw Error(ErrorKind::ShapeMismatch, "fdiff operands differ in shape");
    }
    DiffTensor d(f.width, f.height, f.channels);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        d.data[i] = (static_cast<int>(f.data[i]) - static_cast<int>(f_comp.data[i])) / 255.0;
    }
    return d;
}

NormalizedTensor build_input(const ImageTensor& rgb, const DiffTensor& fdiff, InputMode mode) {
    if (rgb.channels != 3) {
        throw Error(ErrorKind::ShapeMismatch, "build_input needs a 3-channel image");
    }
    require_same_shape(fdiff, rgb, "fdiff and rgb differ in spatial size");
    if (mode != InputMode::RgbOnly && fdiff.channels != 3) {
        throw Error(ErrorKind::ShapeMismatch, "fdiff must have 3 channels");
    }

    const int channels = channels_for(mode);
    NormalizedTensor out(rgb.width, rgb.height, channels);
    const std::size_t pixels = static_cast<std::size_t>(rgb.width) * rgb.height;
    for (std::size_t p = 0; p < pixels; ++p) {
        double* dst = out.data.data() + p * channels;
        int k = 0;
        if (mode != InputMode::FdiffOnly) {
            for (int c = 0; c < 3; ++c) {
                dst[k++] = rgb.data[p * 3 + c] / 255.0;
            }
        }
        if (mode != InputMode::RgbOnly) {
            for (int c = 0; c < 3; ++c) {
                dst[k++] = (fdiff.data[p * 3 + c] + 1.0) / 2.0;
            }
        }
    }
    return out;
}

NormalizedTensor preprocess(const ImageTensor& img, const PreprocessConfig& cfg) {
    const ImageTensor f = resize_bilinear(img, cfg.target_width, cfg.target_height);
    if (cfg.input_mode == InputMode::RgbOnly) {
        return build_input(f, DiffTensor(f.width, f.height, 3), cfg.input_mode);
    }
    const ImageTensor f_comp = jpeg_roundtrip(f, cfg.jpeg_quality, cfg.subsampling);
    return build_input(f, compute_fdiff(f, f_comp), cfg.input_mode);
}

std::vector<std::uint8_t> export_diff_png(const DiffTensor& diff, double gain) {
    if (gain < 1.0) {
        throw Error(ErrorKind::InvalidArgument, "display gain must be >= 1");
    }
    ImageTensor img(diff.width, diff.height, diff.channels);
    for (std::size_t i = 0; i < diff.data.size(); ++i) {
        const double v = std::floor((diff.data[i] * gain + 1.0) / 2.0 * 255.0 + 0.5);
        img.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return encode_png(img);
}

}  // namespace forgerykit::codec
