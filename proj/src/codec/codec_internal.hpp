#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forgerykit/image.hpp"

namespace forgerykit::codec::detail {

ImageTensor decode_jpeg(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_jpeg(const ImageTensor& img, int quality, bool subsample);

ImageTensor decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageTensor& img);

}  // namespace forgerykit::codec::detail
