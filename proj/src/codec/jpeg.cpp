// libjpeg bindings. libjpeg reports errors through a callback that must not
// return, so failures longjmp back into the C-facing helpers below; the C++
// wrappers turn the recorded message into an exception after the jump.

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include <jpeglib.h>

#include "codec_internal.hpp"
#include "forgerykit/error.hpp"

namespace forgerykit::codec::detail {

namespace {

struct ErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void on_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<ErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Corrupt-data conditions (truncation, bad Huffman codes) arrive as warnings
// and libjpeg would otherwise pad the image with gray. Treat them as fatal.
void on_message(j_common_ptr cinfo, int level) {
    if (level < 0) {
        on_error(cinfo);
    }
}

void install(jpeg_error_mgr& mgr) {
    jpeg_std_error(&mgr);
    mgr.error_exit = on_error;
    mgr.emit_message = on_message;
}

struct DecodeState {
    ImageTensor* out;
    ErrorManager err;
    jpeg_decompress_struct cinfo;
};

bool run_decode(std::span<const std::uint8_t> bytes, DecodeState& st) {
    st.cinfo.err = &st.err.pub;
    install(st.err.pub);
    if (setjmp(st.err.jump)) {
        jpeg_destroy_decompress(&st.cinfo);
        return false;
    }
    jpeg_create_decompress(&st.cinfo);
    jpeg_mem_src(&st.cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&st.cinfo, TRUE);
    st.cinfo.out_color_space = JCS_RGB;
    st.cinfo.dct_method = JDCT_ISLOW;
    st.cinfo.do_fancy_upsampling = FALSE;
    jpeg_start_decompress(&st.cinfo);

    ImageTensor& img = *st.out;
    img.width = static_cast<int>(st.cinfo.output_width);
    img.height = static_cast<int>(st.cinfo.output_height);
    img.channels = 3;
    img.data.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    while (st.cinfo.output_scanline < st.cinfo.output_height) {
        JSAMPROW row = img.data.data() + stride * st.cinfo.output_scanline;
        jpeg_read_scanlines(&st.cinfo, &row, 1);
    }
    jpeg_finish_decompress(&st.cinfo);
    jpeg_destroy_decompress(&st.cinfo);
    return true;
}

struct EncodeState {
    const ImageTensor* img;
    int quality;
    bool subsample;
    unsigned char* buffer;
    unsigned long size;
    ErrorManager err;
    jpeg_compress_struct cinfo;
};

bool run_encode(EncodeState& st) {
    st.cinfo.err = &st.err.pub;
    install(st.err.pub);
    if (setjmp(st.err.jump)) {
        jpeg_destroy_compress(&st.cinfo);
        return false;
    }
    jpeg_create_compress(&st.cinfo);
    jpeg_mem_dest(&st.cinfo, &st.buffer, &st.size);

    const ImageTensor& img = *st.img;
    st.cinfo.image_width = static_cast<JDIMENSION>(img.width);
    st.cinfo.image_height = static_cast<JDIMENSION>(img.height);
    st.cinfo.input_components = 3;
    st.cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&st.cinfo);
    jpeg_set_quality(&st.cinfo, st.quality, TRUE);
    st.cinfo.dct_method = JDCT_ISLOW;
    st.cinfo.optimize_coding = FALSE;
    const int luma = st.subsample ? 2 : 1;
    st.cinfo.comp_info[0].h_samp_factor = luma;
    st.cinfo.comp_info[0].v_samp_factor = luma;
    for (int c = 1; c < 3; ++c) {
        st.cinfo.comp_info[c].h_samp_factor = 1;
        st.cinfo.comp_info[c].v_samp_factor = 1;
    }
    jpeg_start_compress(&st.cinfo, TRUE);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    while (st.cinfo.next_scanline < st.cinfo.image_height) {
        auto* row = const_cast<JSAMPLE*>(img.data.data() + stride * st.cinfo.next_scanline);
        jpeg_write_scanlines(&st.cinfo, &row, 1);
    }
    jpeg_finish_compress(&st.cinfo);
    jpeg_destroy_compress(&st.cinfo);
    return true;
}

}  // namespace

ImageTensor decode_jpeg(std::span<const std::uint8_t> bytes) {
    ImageTensor img;
    DecodeState st{};
    st.out = &img;
    if (!run_decode(bytes, st)) {
        throw Error(ErrorKind::MalformedImage, std::string("jpeg: ") + st.err.message);
    }
    return img;
}

std::vector<std::uint8_t> encode_jpeg(const ImageTensor& img, int quality, bool subsample) {
    if (img.channels != 3 || img.width < 1 || img.height < 1) {
        throw Error(ErrorKind::EncodeFailure, "jpeg encoder needs a non-empty 3-channel image");
    }
    EncodeState st{};
    st.img = &img;
    st.quality = quality;
    st.subsample = subsample;
    const bool ok = run_encode(st);
    std::vector<std::uint8_t> out;
    if (ok) {
        out.assign(st.buffer, st.buffer + st.size);
    }
    std::free(st.buffer);
    if (!ok) {
        throw Error(ErrorKind::EncodeFailure, std::string("jpeg: ") + st.err.message);
    }
    return out;
}

}  // namespace forgerykit::codec::detail
