#pragma once

#include <filesystem>

#include "pcmp/colorlab.hpp"

namespace pcmp {

/// Decodes a PNG or JPEG file (detected by magic bytes) into RGB or RGBA.
/// Throws Error(IoError) for unreadable or unsupported files.
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB/RGBA PNG. Used by fixtures and tooling.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace pcmp
