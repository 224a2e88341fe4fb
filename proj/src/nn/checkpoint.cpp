// Checkpoint container (see docs/formats.md):
//
//   offset  size  field
//   0       8     magic "FKMODEL\0"
//   8       4     format version, u32 little-endian (currently 1)
//   12      4     header length H, u32 little-endian
//   16      H     UTF-8 JSON header: config, layout, preprocessing,
//                 training summary
//   16+H    8     parameter count N, u64 little-endian
//   24+H    8N    parameters, IEEE-754 binary64 little-endian

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

#include "forgerykit/error.hpp"
#include "forgerykit/io.hpp"
#include "forgerykit/nn.hpp"

namespace forgerykit::nn {

namespace {

using nlohmann::ordered_json;

constexpr char kMagic[8] = {'F', 'K', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t at, int width) {
    if (at + static_cast<std::size_t>(width) > bytes.size()) {
        throw Error(ErrorKind::ParseError, "checkpoint truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
        v |= static_cast<std::uint64_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

ordered_json header_json(const TrainedModel& model) {
    const auto& c = model.config;
    ordered_json stem = ordered_json::array();
    for (const auto& s : c.stem) {
        stem.push_back({{"out_channels", s.out_channels}, {"kernel", s.kernel}, {"stride", s.stride}});
    }
    ordered_json layout = ordered_json::array();
    for (const auto& b : param_layout(c)) {
        layout.push_back({{"name", b.name}, {"offset", b.offset}, {"shape", b.shape}});
    }
    ordered_json h;
    h["config"] = {{"input_channels", c.input_channels},
                   {"input_size", c.input_size},
                   {"stem", stem},
                   {"head_units", c.head_units},
                   {"dropout_rate", io::format_real(c.dropout_rate)}};
    h["layout"] = layout;
    h["preprocess"] = {{"target_width", model.preprocess.target_width},
                       {"target_height", model.preprocess.target_height},
                       {"jpeg_quality", model.preprocess.jpeg_quality},
                       {"input_mode", codec::to_string(model.preprocess.input_mode)},
                       {"subsampling", codec::to_string(model.preprocess.subsampling)}};
    h["epochs_run"] = model.epochs_run;
    h["best_val_loss"] = io::format_real(model.best_val_loss);
    return h;
}

double real_field(const ordered_json& j, const char* key) {
    double v = 0.0;
    if (!j.contains(key) || !j[key].is_string()) {
        throw Error(ErrorKind::ParseError, std::string("checkpoint header lacks ") + key);
    }
    const auto text = j[key].get<std::string>();
    if (!io::parse_real(text, v)) {
        throw Error(ErrorKind::ParseError, std::string("checkpoint header has a bad ") + key);
    }
    return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model) {
    if (model.parameters.size() != param_count(model.config)) {
        throw Error(ErrorKind::ShapeMismatch, "parameter vector does not match the model layout");
    }
    const std::string header = header_json(model).dump();
    std::vector<std::uint8_t> out(kMagic, kMagic + 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    put_u64(out, model.parameters.size());
    out.reserve(out.size() + 8 * model.parameters.size());
    for (double p : model.parameters) {
        put_u64(out, std::bit_cast<std::uint64_t>(p));
    }
    return out;
}

TrainedModel parse_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw Error(ErrorKind::ParseError, "not a forgerykit checkpoint");
    }
    const auto version = get_le(bytes, 8, 4);
    if (version != kVersion) {
        throw Error(ErrorKind::ParseError, "unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = static_cast<std::size_t>(get_le(bytes, 12, 4));
    if (16 + header_len > bytes.size()) {
        throw Error(ErrorKind::ParseError, "checkpoint truncated");
    }
    ordered_json h;
    try {
        h = ordered_json::parse(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(16 + header_len));
    } catch (const ordered_json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("checkpoint header: ") + e.what());
    }

    TrainedModel model;
    try {
        const auto& c = h.at("config");
        model.config.input_channels = c.at("input_channels").get<int>();
        model.config.input_size = c.at("input_size").get<int>();
        model.config.head_units = c.at("head_units").get<int>();
        model.config.dropout_rate = real_field(c, "dropout_rate");
        model.config.stem.clear();
        for (const auto& s : c.at("stem")) {
            model.config.stem.push_back(
                {s.at("out_channels").get<int>(), s.at("kernel").get<int>(), s.at("stride").get<int>()});
        }
        const auto& pp = h.at("preprocess");
        model.preprocess.target_width = pp.at("target_width").get<int>();
        model.preprocess.target_height = pp.at("target_height").get<int>();
        model.preprocess.jpeg_quality = pp.at("jpeg_quality").get<int>();
        model.preprocess.input_mode = codec::parse_input_mode(pp.at("input_mode").get<std::string>());
        model.preprocess.subsampling = codec::parse_subsampling(pp.at("subsampling").get<std::string>());
        model.epochs_run = h.at("epochs_run").get<int>();
        model.best_val_loss = real_field(h, "best_val_loss");
    } catch (const ordered_json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("checkpoint header: ") + e.what());
    }
    try {
        model.config.validate();
        model.preprocess.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ParseError, std::string("checkpoint config: ") + e.what());
    }
    if (h.contains("layout") && h["layout"] != header_json(TrainedModel{model.config, {}, 0, 0.0, {}})["layout"]) {
        throw Error(ErrorKind::ParseError, "checkpoint layout does not match its config");
    }

    std::size_t at = 16 + header_len;
    const auto n = get_le(bytes, at, 8);
    at += 8;
    if (n != param_count(model.config) || bytes.size() != at + 8 * n) {
        throw Error(ErrorKind::ParseError, "checkpoint parameter block has the wrong size");
    }
    model.parameters.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        model.parameters[i] = std::bit_cast<double>(get_le(bytes, at + 8 * i, 8));
    }
    return model;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize_checkpoint(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(io::read_file(path));
}

}  // namespace forgerykit::nn
