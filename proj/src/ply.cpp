#include "gsattack/ply.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <zlib.h>

#include "gsattack/error.hpp"

namespace gsattack {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

// Slot order inside GaussianKernel as written to disk.
constexpr std::array<const char*, 14> kRequired = {
    "x",       "y",       "z",       "f_dc_0",  "f_dc_1",  "f_dc_2", "opacity", "scale_0", "scale_1",
    "scale_2", "rot_0",   "rot_1",   "rot_2",   "rot_3",
};

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::optional<ScalarType> parse_scalar_type(const std::string& name) {
    if (name == "char" || name == "int8") return ScalarType::i8;
    if (name == "uchar" || name == "uint8") return ScalarType::u8;
    if (name == "short" || name == "int16") return ScalarType::i16;
    if (name == "ushort" || name == "uint16") return ScalarType::u16;
    if (name == "int" || name == "int32") return ScalarType::i32;
    if (name == "uint" || name == "uint32") return ScalarType::u32;
    if (name == "float" || name == "float32") return ScalarType::f32;
    if (name == "double" || name == "float64") return ScalarType::f64;
    return std::nullopt;
}

std::size_t byte_size(ScalarType t) {
    switch (t) {
        case ScalarType::i8:
        case ScalarType::u8: return 1;
        case ScalarType::i16:
        case ScalarType::u16: return 2;
        case ScalarType::i32:
        case ScalarType::u32:
        case ScalarType::f32: return 4;
        case ScalarType::f64: return 8;
    }
    return 0;
}

template <typename T>
T read_raw(const char* p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    return value;
}

// Floats are returned unchanged so binary float32 fields stay bit-exact.
float read_binary(ScalarType t, const char* p) {
    switch (t) {
        case ScalarType::i8: return static_cast<float>(read_raw<std::int8_t>(p));
        case ScalarType::u8: return static_cast<float>(read_raw<std::uint8_t>(p));
        case ScalarType::i16: return static_cast<float>(read_raw<std::int16_t>(p));
        case ScalarType::u16: return static_cast<float>(read_raw<std::uint16_t>(p));
        case ScalarType::i32: return static_cast<float>(read_raw<std::int32_t>(p));
        case ScalarType::u32: return static_cast<float>(read_raw<std::uint32_t>(p));
        case ScalarType::f32: return read_raw<float>(p);
        case ScalarType::f64: return static_cast<float>(read_raw<double>(p));
    }
    return 0.0f;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::f32;
    bool is_list = false;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;

    std::size_t stride() const {
        std::size_t s = 0;
        for (const auto& p : properties) s += byte_size(p.type);
        return s;
    }
};

struct Header {
    bool ascii = false;
    std::vector<Element> elements;
    std::size_t body_offset = 0;
};

Header parse_header(const std::string& bytes) {
    Header header;
    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string> {
        if (pos >= bytes.size()) return std::nullopt;
        auto end = bytes.find('\n', pos);
        if (end == std::string::npos) end = bytes.size();
        std::string line = bytes.substr(pos, end - pos);
        pos = std::min(bytes.size(), end + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    auto magic = next_line();
    if (!magic || *magic != "ply") throw FormatError("ply", "not a PLY file (missing 'ply' magic line)");

    bool have_format = false;
    while (true) {
        auto line = next_line();
        if (!line) throw FormatError("end_header", "PLY header is not terminated by end_header");
        std::istringstream in(*line);
        std::string keyword;
        in >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
        if (keyword == "end_header") break;
        if (keyword == "format") {
            std::string fmt;
            in >> fmt;
            if (fmt == "ascii") {
                header.ascii = true;
            } else if (fmt == "binary_little_endian") {
                header.ascii = false;
            } else {
                throw FormatError("format", "unsupported PLY format '" + fmt + "'");
            }
            have_format = true;
        } else if (keyword == "element") {
            Element e;
            long long count = -1;
            in >> e.name >> count;
            if (!in || count < 0) throw FormatError("element", "malformed element line: " + *line);
            e.count = static_cast<std::size_t>(count);
            header.elements.push_back(std::move(e));
        } else if (keyword == "property") {
            if (header.elements.empty()) throw FormatError("property", "property declared before any element");
            std::string type_name;
            in >> type_name;
            Property prop;
            if (type_name == "list") {
                std::string count_type, item_type;
                in >> count_type >> item_type >> prop.name;
                prop.is_list = true;
            } else {
                auto type = parse_scalar_type(type_name);
                if (!type) throw FormatError("property", "unknown property type '" + type_name + "'");
                prop.type = *type;
                in >> prop.name;
            }
            if (prop.name.empty()) throw FormatError("property", "property without a name: " + *line);
            header.elements.back().properties.push_back(std::move(prop));
        } else {
            throw FormatError(keyword, "unexpected PLY header keyword '" + keyword + "'");
        }
    }
    if (!have_format) throw FormatError("format", "PLY header lacks a format line");
    header.body_offset = pos;
    return header;
}

void assign_slot(GaussianKernel& k, std::size_t slot, float v) {
    switch (slot) {
        case 0: case 1: case 2: k.position[slot] = v; break;
        case 3: case 4: case 5: k.dc_color[slot - 3] = v; break;
        case 6: k.opacity_logit = v; break;
        case 7: case 8: case 9: k.log_scale[slot - 7] = v; break;
        default: k.rotation[slot - 10] = v; break;
    }
}

void normalize_rotation(GaussianKernel& k, std::size_t index) {
    double norm2 = 0.0;
    for (float q : k.rotation) norm2 += static_cast<double>(q) * q;
    const double norm = std::sqrt(norm2);
    if (!(norm >= 1e-8)) {
        throw FormatError("rot_0", "vertex " + std::to_string(index) + " has a degenerate rotation quaternion");
    }
    // Already-unit quaternions are kept bit-for-bit so save/load is lossless.
    if (std::abs(norm - 1.0) <= 1e-6) return;
    for (float& q : k.rotation) q = static_cast<float>(q / norm);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string gunzip(const std::filesystem::path& path) {
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) throw IoError("cannot open '" + path.string() + "' as gzip");
    std::string out;
    std::array<char, 1 << 16> chunk{};
    int got = 0;
    while ((got = gzread(file, chunk.data(), static_cast<unsigned>(chunk.size()))) > 0) out.append(chunk.data(), got);
    const bool failed = got < 0;
    gzclose(file);
    if (failed) throw IoError("corrupt gzip stream in '" + path.string() + "'");
    return out;
}

}  // namespace

SplatModel parse_ply(const std::string& bytes, const std::string& source_tag) {
    const Header header = parse_header(bytes);

    std::size_t vertex_element = header.elements.size();
    for (std::size_t i = 0; i < header.elements.size(); ++i) {
        if (header.elements[i].name == "vertex") {
            vertex_element = i;
            break;
        }
    }
    if (vertex_element == header.elements.size()) throw FormatError("vertex", "PLY has no vertex element");
    const Element& vertex = header.elements[vertex_element];

    // Map each declared property to its kernel slot (or none).
    std::vector<int> slot_of(vertex.properties.size(), -1);
    bool has_sh_rest = false;
    for (std::size_t slot = 0; slot < kRequired.size(); ++slot) {
        bool found = false;
        for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
            if (vertex.properties[p].name == kRequired[slot]) {
                if (vertex.properties[p].is_list) {
                    throw FormatError(kRequired[slot], std::string("property '") + kRequired[slot] + "' is a list");
                }
                slot_of[p] = static_cast<int>(slot);
                found = true;
                break;
            }
        }
        if (!found) {
            throw FormatError(kRequired[slot],
                              std::string("missing required vertex property '") + kRequired[slot] + "'");
        }
    }
    for (const auto& p : vertex.properties) {
        if (p.name.rfind("f_rest_", 0) == 0) has_sh_rest = true;
    }
    if (has_sh_rest) std::clog << "warning: ignoring higher-order SH coefficients (f_rest_*) in PLY input\n";

    SplatModel model;
    model.source_tag = source_tag;
    model.kernels.resize(vertex.count);

    if (header.ascii) {
        std::size_t pos = header.body_offset;
        auto next_line = [&]() -> std::optional<std::string_view> {
            while (pos < bytes.size()) {
                auto end = bytes.find('\n', pos);
                if (end == std::string::npos) end = bytes.size();
                std::string_view line(bytes.data() + pos, end - pos);
                pos = end + 1;
                if (line.find_first_not_of(" \t\r") != std::string_view::npos) return line;
            }
            return std::nullopt;
        };
        // Elements preceding the vertex block are skipped line by line.
        for (std::size_t e = 0; e < vertex_element; ++e) {
            for (std::size_t i = 0; i < header.elements[e].count; ++i) {
                if (!next_line()) throw TruncationError("PLY body ends inside element '" + header.elements[e].name + "'");
            }
        }
        for (std::size_t i = 0; i < vertex.count; ++i) {
            auto line = next_line();
            if (!line) {
                throw TruncationError("PLY declares " + std::to_string(vertex.count) + " vertices but holds " +
                                      std::to_string(i));
            }
            std::istringstream in{std::string(*line)};
            for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
                if (vertex.properties[p].is_list) throw FormatError(vertex.properties[p].name, "list properties in vertex element are unsupported");
                double value = 0.0;
                if (!(in >> value)) {
                    throw TruncationError("vertex " + std::to_string(i) + " has fewer values than declared properties");
                }
                if (slot_of[p] >= 0) assign_slot(model.kernels[i], static_cast<std::size_t>(slot_of[p]), static_cast<float>(value));
            }
            normalize_rotation(model.kernels[i], i);
        }
    } else {
        std::size_t offset = header.body_offset;
        for (std::size_t e = 0; e < vertex_element; ++e) {
            for (const auto& p : header.elements[e].properties) {
                if (p.is_list) throw FormatError(p.name, "cannot skip list property before vertex element");
            }
            offset += header.elements[e].count * header.elements[e].stride();
        }
        for (const auto& p : vertex.properties) {
            if (p.is_list) throw FormatError(p.name, "list properties in vertex element are unsupported");
        }
        const std::size_t stride = vertex.stride();
        const std::size_t available = bytes.size() > offset ? bytes.size() - offset : 0;
        if (available < vertex.count * stride) {
            throw TruncationError("PLY declares " + std::to_string(vertex.count) + " vertices but holds " +
                                  std::to_string(stride == 0 ? 0 : available / stride));
        }
        for (std::size_t i = 0; i < vertex.count; ++i) {
            const char* row = bytes.data() + offset + i * stride;
            for (std::size_t p = 0; p < vertex.properties.size(); ++p) {
                const auto& prop = vertex.properties[p];
                if (slot_of[p] >= 0) assign_slot(model.kernels[i], static_cast<std::size_t>(slot_of[p]), read_binary(prop.type, row));
                row += byte_size(prop.type);
            }
            normalize_rotation(model.kernels[i], i);
        }
    }
    return model;
}

SplatModel load_ply(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f && static_cast<unsigned char>(bytes[1]) == 0x8b) {
        bytes = gunzip(path);
    }
    return parse_ply(bytes, path.string());
}

std::string serialize_ply(const SplatModel& model, PlyEncoding encoding) {
    std::ostringstream out;
    out << "ply\n"
        << "format " << (encoding == PlyEncoding::ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
    if (!model.source_tag.empty() && model.source_tag.find('\n') == std::string::npos) {
        out << "comment source " << model.source_tag << "\n";
    }
    out << "element vertex " << model.size() << "\n";
    for (const char* name : kRequired) out << "property float " << name << "\n";
    out << "end_header\n";

    for (const auto& k : model.kernels) {
        const std::array<float, 14> row = {
            k.position[0],    k.position[1],  k.position[2],  k.dc_color[0],  k.dc_color[1],  k.dc_color[2],
            k.opacity_logit,  k.log_scale[0], k.log_scale[1], k.log_scale[2], k.rotation[0],  k.rotation[1],
            k.rotation[2],    k.rotation[3],
        };
        if (encoding == PlyEncoding::ascii) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? " " : "") << std::setprecision(std::numeric_limits<float>::max_digits10) << row[i];
            }
            out << "\n";
        } else {
            out.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * row.size());
        }
    }
    return out.str();
}

void save_ply(const SplatModel& model, const std::filesystem::path& path, PlyEncoding encoding) {
    const std::string bytes = serialize_ply(model, encoding);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace gsattack
