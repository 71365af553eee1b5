#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "omniloc/geometry.hpp"

namespace omniloc {

enum class Sampler { kNearest, kBilinear };

/// Row-major, channel-interleaved 8-bit image with 1 or 3 channels.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels);
  RasterImage(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  std::span<std::uint8_t> row(int y) {
    return {data_.data() + static_cast<size_t>(y) * width_ * channels_,
            static_cast<size_t>(width_) * channels_};
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const RasterImage&) const = default;

 private:
  size_t index(int x, int y, int c) const {
    return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel depth in meters along the unprojected ray. Non-positive or
/// non-finite values mark invalid pixels.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  float& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  float at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  static bool valid(float d);

  bool operator==(const DepthMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

enum class EdgeMode {
  kClamp,
  // Horizontal wrap-around (equirectangular seam), vertical clamp.
  kWrapX,
};

/// Samples channel values at continuous pixel position `p` into `out`
/// (size == channels). Pixel centers sit at integer + 0.5.
void sample(const RasterImage& img, const Pixel& p, Sampler sampler, EdgeMode edge,
            std::span<double> out);

/// Nearest-pixel depth lookup under the same conventions.
float sample_depth(const DepthMap& depth, const Pixel& p, EdgeMode edge);

}  // namespace omniloc
