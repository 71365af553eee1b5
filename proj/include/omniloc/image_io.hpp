#pragma once

#include <string>

#include "omniloc/raster.hpp"

namespace omniloc {

/// Reads PNG/JPEG; grayscale files stay 1-channel, everything else becomes 3-channel.
RasterImage read_image(const std::string& path);
/// Format follows the extension (.png, .jpg, .jpeg).
void write_image(const std::string& path, const RasterImage& img);

}  // namespace omniloc
