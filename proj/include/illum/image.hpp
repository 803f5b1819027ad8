#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "illum/color.hpp"

namespace illum {

/// Demosaiced 16-bit sensor image, interleaved RGB, row-major.
struct Raw16Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;

  std::uint16_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint16_t& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

using ChannelLevels = std::array<int, 3>;

/// Linear raw-RGB image normalized to [0, 1], with an optional exclusion mask
/// (true = pixel is ignored by every estimator, e.g. a color chart).
class RawImage {
 public:
  RawImage() = default;
  RawImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double at(int x, int y, int c) const { return pixels_[index(x, y) * 3 + c]; }
  double& at(int x, int y, int c) { return pixels_[index(x, y) * 3 + c]; }

  Eigen::Vector3d pixel(int x, int y) const {
    const std::size_t i = index(x, y) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set_pixel(int x, int y, const Eigen::Vector3d& v) {
    const std::size_t i = index(x, y) * 3;
    pixels_[i] = v[0];
    pixels_[i + 1] = v[1];
    pixels_[i + 2] = v[2];
  }

  bool masked(int x, int y) const { return !mask_.empty() && mask_[index(x, y)] != 0; }
  void set_masked(int x, int y, bool m);
  bool has_mask() const { return !mask_.empty(); }
  std::size_t unmasked_count() const;

  const std::vector<double>& data() const { return pixels_; }
  std::vector<double>& data() { return pixels_; }

  /// Returns a copy with every channel value multiplied by alpha.
  RawImage scaled(double alpha) const;

  friend bool operator==(const RawImage&, const RawImage&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
  std::vector<std::uint8_t> mask_;
};

struct MaskRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const MaskRect&, const MaskRect&) = default;
};

/// clamp((v - black) / (saturation - black), 0, 1) per channel.
RawImage normalize_raw(const Raw16Image& raw, const ChannelLevels& black,
                       const ChannelLevels& saturation);

/// Marks every pixel inside the rectangles (clipped to the image) as masked.
void apply_mask_rects(RawImage& img, const std::vector<MaskRect>& rects);

/// Area-averaging resize. Masked source pixels do not contribute; an output
/// pixel whose footprint is entirely masked becomes masked.
RawImage downsample(const RawImage& img, int target_w, int target_h);

}  // namespace illum
