#include "illum/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace illum {

RawImage::RawImage(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  pixels_.assign(pixel_count() * 3, 0.0);
}

void RawImage::set_masked(int x, int y, bool m) {
  if (mask_.empty()) {
    if (!m) return;
    mask_.assign(pixel_count(), 0);
  }
  mask_[index(x, y)] = m ? 1 : 0;
}

std::size_t RawImage::unmasked_count() const {
  if (mask_.empty()) return pixel_count();
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 0));
}

RawImage RawImage::scaled(double alpha) const {
  RawImage out = *this;
  for (double& v : out.pixels_) v *= alpha;
  return out;
}

RawImage normalize_raw(const Raw16Image& raw, const ChannelLevels& black,
                       const ChannelLevels& saturation) {
  for (int c = 0; c < 3; ++c) {
    if (saturation[c] <= black[c]) {
      throw Error(ErrorCode::BadLevels, "saturation level must exceed black level on channel " +
                                            std::to_string(c));
    }
  }
  if (raw.data.size() != static_cast<std::size_t>(raw.width) * raw.height * 3) {
    throw Error(ErrorCode::InvalidArgument, "raw buffer size does not match dimensions");
  }
  RawImage out(raw.width, raw.height);
  std::array<double, 3> range{};
  for (int c = 0; c < 3; ++c) range[c] = static_cast<double>(saturation[c] - black[c]);

  auto& dst = out.data();
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    const double v = (static_cast<double>(raw.data[i]) - black[c]) / range[c];
    dst[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

void apply_mask_rects(RawImage& img, const std::vector<MaskRect>& rects) {
  for (const auto& r : rects) {
    const int x0 = std::max(0, r.x);
    const int y0 = std::max(0, r.y);
    const int x1 = std::min(img.width(), r.x + r.w);
    const int y1 = std::min(img.height(), r.y + r.h);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) img.set_masked(x, y, true);
  }
}

namespace {

struct Tap {
  int src;
  double weight;
};

// Source footprint of each output sample along one axis, as (index, overlap).
std::vector<std::vector<Tap>> footprints(int src_len, int dst_len) {
  std::vector<std::vector<Tap>> out(dst_len);
  const double scale = static_cast<double>(src_len) / dst_len;
  for (int o = 0; o < dst_len; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src_len - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int s = first; s <= last; ++s) {
      const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (w > 0.0) out[o].push_back({s, w});
    }
  }
  return out;
}

}  // namespace

RawImage downsample(const RawImage& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) {
    throw Error(ErrorCode::InvalidArgument, "target dimensions must be positive");
  }
  const auto fx = footprints(img.width(), target_w);
  const auto fy = footprints(img.height(), target_h);

  RawImage out(target_w, target_h);
  for (int oy = 0; oy < target_h; ++oy) {
    for (int ox = 0; ox < target_w; ++ox) {
      double acc[3] = {0.0, 0.0, 0.0};
      double wsum = 0.0;
      for (const Tap& ty : fy[oy]) {
        for (const Tap& tx : fx[ox]) {
          if (img.masked(tx.src, ty.src)) continue;
          const double w = tx.weight * ty.weight;
          for (int c = 0; c < 3; ++c) acc[c] += w * img.at(tx.src, ty.src, c);
          wsum += w;
        }
      }
      if (wsum > 0.0) {
        for (int c = 0; c < 3; ++c) out.at(ox, oy, c) = acc[c] / wsum;
      } else {
        out.set_masked(ox, oy, true);
      }
    }
  }
  return out;
}

}  // namespace illum
