#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace forgerykit {

// 8-bit raster at the codec boundary: row-major, channel-interleaved.
struct ImageTensor {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageTensor() = default;
    ImageTensor(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    std::uint8_t& at(int x, int y, int c) noexcept { return data[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }

    bool same_shape(const ImageTensor& o) const noexcept {
        return width == o.width && height == o.height && channels == o.channels;
    }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

// Real-valued raster with the same layout as ImageTensor. Used both for the
// signed compression difference (values in [-1, 1]) and for normalized
// network inputs (values in [0, 1]).
struct RealTensor {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    RealTensor() = default;
    RealTensor(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double at(int x, int y, int c) const noexcept { return data[index(x, y, c)]; }

    friend bool operator==(const RealTensor&, const RealTensor&) = default;
};

// F - F_comp scaled by 1/255. Values lie in [-1, 1]; no gain is ever
// applied to the stored data (see codec::export_diff_png for display gain).
struct DiffTensor : RealTensor {
    using RealTensor::RealTensor;
};

// Network input: values in [0, 1].
struct NormalizedTensor : RealTensor {
    using RealTensor::RealTensor;
};

}  // namespace forgerykit
