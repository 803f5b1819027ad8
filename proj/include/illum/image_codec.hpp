#pragma once

#include <filesystem>

#include "illum/image.hpp"

namespace illum {

/// Reads a 16-bit, 3-channel PNG or TIFF (format sniffed from the file
/// header). Anything else is a DecodeError; a missing file is MissingImage.
Raw16Image read_image16(const std::filesystem::path& path);

void write_png16(const std::filesystem::path& path, const Raw16Image& img);
void write_tiff16(const std::filesystem::path& path, const Raw16Image& img);

/// Quantizes a [0, 1] image to 16 bits (round to nearest). Masked pixels are
/// written as they are stored.
Raw16Image to_raw16(const RawImage& img);

}  // namespace illum
