#pragma once

#include <filesystem>

#include "gsattack/splat.hpp"

namespace gsattack {

enum class PlyEncoding { ascii, binary_little_endian };

/// Reads the standard splat vertex layout (x, y, z, f_dc_0..2, opacity,
/// scale_0..2, rot_0..3). Extra properties such as f_rest_* and normals are
/// skipped. Gzip-compressed files are detected by their magic bytes.
///
/// Throws FormatError for a missing property or malformed header,
/// TruncationError when the body holds fewer vertices than declared and
/// IoError when the file cannot be read.
SplatModel load_ply(const std::filesystem::path& path);

/// Same as load_ply, from an in-memory file image.
SplatModel parse_ply(const std::string& bytes, const std::string& source_tag = {});

/// Writes the 14 required float properties. Binary output round-trips
/// through load_ply bit-exactly.
void save_ply(const SplatModel& model, const std::filesystem::path& path,
              PlyEncoding encoding = PlyEncoding::binary_little_endian);

std::string serialize_ply(const SplatModel& model, PlyEncoding encoding = PlyEncoding::binary_little_endian);

}  // namespace gsattack
