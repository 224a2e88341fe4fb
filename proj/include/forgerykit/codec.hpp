#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "forgerykit/image.hpp"

namespace forgerykit::codec {

enum class InputMode { RgbOnly, FdiffOnly, Hybrid };
enum class ChromaSubsampling { S420, S444 };

std::string_view to_string(InputMode mode) noexcept;
InputMode parse_input_mode(std::string_view text);
std::string_view to_string(ChromaSubsampling s) noexcept;
ChromaSubsampling parse_subsampling(std::string_view text);

int channels_for(InputMode mode) noexcept;

struct PreprocessConfig {
    int target_width = 224;
    int target_height = 224;
    int jpeg_quality = 90;
    InputMode input_mode = InputMode::Hybrid;
    ChromaSubsampling subsampling = ChromaSubsampling::S420;

    // Throws InvalidArgument on out-of-range fields.
    void validate() const;
};

// Decodes a JPEG or PNG stream into a 3-channel RGB tensor. Grayscale is
// expanded to three identical channels; alpha is dropped.
ImageTensor decode_image(std::span<const std::uint8_t> bytes);
ImageTensor load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_jpeg(const ImageTensor& img, int quality,
                                      ChromaSubsampling subsampling = ChromaSubsampling::S420);
std::vector<std::uint8_t> encode_png(const ImageTensor& img);

// Half-pixel-center bilinear interpolation with edge clamping; outputs are
// rounded to nearest and clamped to [0, 255].
ImageTensor resize_bilinear(const ImageTensor& img, int target_width, int target_height);

// Encode as baseline JPEG at `quality` and decode again.
ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality,
                           ChromaSubsampling subsampling = ChromaSubsampling::S420);

// Elementwise (f - f_comp) / 255.
DiffTensor compute_fdiff(const ImageTensor& f, const ImageTensor& f_comp);

NormalizedTensor build_input(const ImageTensor& rgb, const DiffTensor& fdiff, InputMode mode);

// resize -> recompress -> diff -> assemble, in that order, so the image and
// its recompressed copy always share dimensions.
NormalizedTensor preprocess(const ImageTensor& img, const PreprocessConfig& cfg);

// Debug export: value = round((diff * gain + 1) / 2 * 255), clamped.
std::vector<std::uint8_t> export_diff_png(const DiffTensor& diff, double gain);

}  // namespace forgerykit::codec
