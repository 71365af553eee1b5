#include "omniloc/raster.hpp"

#include <algorithm>
#include <cmath>

#include "omniloc/error.hpp"

namespace omniloc {

RasterImage::RasterImage(int width, int height, int channels)
    : RasterImage(width, height, channels,
                  std::vector<std::uint8_t>(static_cast<size_t>(std::max(width, 0)) *
                                            std::max(height, 0) * std::max(channels, 0))) {}

RasterImage::RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "images must have 1 or 3 channels");
  }
  if (data_.size() != static_cast<size_t>(width) * height * channels) {
    throw Error(ErrorCode::kDimensionMismatch, "image buffer size does not match dimensions");
  }
}

DepthMap::DepthMap(int width, int height, float fill)
    : width_(width), height_(height), data_(static_cast<size_t>(std::max(width, 0)) *
                                                std::max(height, 0),
                                            fill) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "depth map dimensions must be positive");
  }
}

bool DepthMap::valid(float d) { return std::isfinite(d) && d > 0.0f; }

namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

int fix_x(int x, int width, EdgeMode edge) {
  return edge == EdgeMode::kWrapX ? wrap(x, width) : std::clamp(x, 0, width - 1);
}

}  // namespace

void sample(const RasterImage& img, const Pixel& p, Sampler sampler, EdgeMode edge,
            std::span<double> out) {
  const int channels = img.channels();
  if (sampler == Sampler::kNearest) {
    const int x = fix_x(static_cast<int>(std::floor(p.x())), img.width(), edge);
    const int y = std::clamp(static_cast<int>(std::floor(p.y())), 0, img.height() - 1);
    for (int c = 0; c < channels; ++c) out[c] = img.at(x, y, c);
    return;
  }
  const double fx = p.x() - 0.5;
  const double fy = p.y() - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double ax = fx - x0f;
  const double ay = fy - y0f;
  const int x0 = fix_x(static_cast<int>(x0f), img.width(), edge);
  const int x1 = fix_x(static_cast<int>(x0f) + 1, img.width(), edge);
  const int y0 = std::clamp(static_cast<int>(y0f), 0, img.height() - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, img.height() - 1);
  for (int c = 0; c < channels; ++c) {
    const double top = (1.0 - ax) * img.at(x0, y0, c) + ax * img.at(x1, y0, c);
    const double bottom = (1.0 - ax) * img.at(x0, y1, c) + ax * img.at(x1, y1, c);
    out[c] = (1.0 - ay) * top + ay * bottom;
  }
}

float sample_depth(const DepthMap& depth, const Pixel& p, EdgeMode edge) {
  const int x = fix_x(static_cast<int>(std::floor(p.x())), depth.width(), edge);
  const int y = std::clamp(static_cast<int>(std::floor(p.y())), 0, depth.height() - 1);
  return depth.at(x, y);
}

}  // namespace omniloc
