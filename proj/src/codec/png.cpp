#include <cstring>
#include <string>

#include <png.h>

#include "codec_internal.hpp"
#include "forgerykit/error.hpp"

namespace forgerykit::codec::detail {

ImageTensor decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(ErrorKind::MalformedImage, std::string("png: ") + image.message);
    }
    // Drops alpha by compositing onto black; grayscale is expanded to RGB.
    image.format = PNG_FORMAT_RGB;
    ImageTensor img(static_cast<int>(image.width), static_cast<int>(image.height), 3);
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&image, &background, img.data.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorKind::MalformedImage, "png: " + msg);
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const ImageTensor& img) {
    if ((img.channels != 1 && img.channels != 3) || img.width < 1 || img.height < 1) {
        throw Error(ErrorKind::EncodeFailure, "png encoder needs a non-empty 1- or 3-channel image");
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(image, size, 0, img.data.data(), 0, nullptr)) {
        throw Error(ErrorKind::EncodeFailure, std::string("png: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data.data(), 0, nullptr)) {
        throw Error(ErrorKind::EncodeFailure, std::string("png: ") + image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace forgerykit::codec::detail
