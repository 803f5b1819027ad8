#include "illum/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "pairwise_sum.hpp"

namespace illum {

EstimatorConfig EstimatorConfig::defaults_for(EstimatorMethod method) {
  EstimatorConfig cfg;
  cfg.method = method;
  switch (method) {
    case EstimatorMethod::GrayWorld: cfg.p = 1.0; break;
    case EstimatorMethod::MaxRGB: cfg.p = 1.0; break;
    case EstimatorMethod::ShadesOfGray: cfg.p = 4.0; break;
    case EstimatorMethod::GrayEdge1:
    case EstimatorMethod::GrayEdge2:
      cfg.p = 6.0;
      cfg.sigma = 2.0;
      break;
    case EstimatorMethod::PcaBrightDark: cfg.pca_percent = 0.035; break;
  }
  return cfg;
}

std::string_view to_string(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::GrayWorld: return "gw";
    case EstimatorMethod::MaxRGB: return "maxrgb";
    case EstimatorMethod::ShadesOfGray: return "sog";
    case EstimatorMethod::GrayEdge1: return "ge1";
    case EstimatorMethod::GrayEdge2: return "ge2";
    case EstimatorMethod::PcaBrightDark: return "pca";
  }
  return "?";
}

EstimatorMethod parse_estimator(std::string_view name) {
  for (auto m : {EstimatorMethod::GrayWorld, EstimatorMethod::MaxRGB, EstimatorMethod::ShadesOfGray,
                 EstimatorMethod::GrayEdge1, EstimatorMethod::GrayEdge2,
                 EstimatorMethod::PcaBrightDark}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

namespace {

using ChannelValues = std::array<std::vector<double>, 3>;

ChannelValues gather_unmasked(const RawImage& img) {
  ChannelValues out;
  const std::size_t n = img.unmasked_count();
  if (n == 0) throw Error(ErrorCode::AllMasked, "image has no unmasked pixels");
  for (auto& ch : out) ch.reserve(n);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.masked(x, y)) continue;
      for (int c = 0; c < 3; ++c) out[c].push_back(img.at(x, y, c));
    }
  }
  return out;
}

// ((sum v^p) / N)^(1/p), evaluated relative to the channel maximum for p > 1
// so that large orders neither overflow nor flush small values to zero.
double minkowski_mean(const std::vector<double>& v, double p) {
  const double n = static_cast<double>(v.size());
  if (p == 1.0) return detail::pairwise_sum(v) / n;
  const double peak = *std::max_element(v.begin(), v.end());
  if (peak <= 0.0) return 0.0;
  std::vector<double> powered(v.size());
  std::transform(v.begin(), v.end(), powered.begin(),
                 [&](double x) { return std::pow(x / peak, p); });
  return peak * std::pow(detail::pairwise_sum(powered) / n, 1.0 / p);
}

void require_order(double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "Minkowski order must be >= 1");
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  }
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= s;
  return k;
}

// Blurred channel plus a validity flag (false where no unmasked pixel fell
// inside the kernel footprint).
struct Smoothed {
  std::vector<double> value;
  std::vector<std::uint8_t> valid;
};

// Normalized convolution: blur(I * m) / blur(m), separable, zero outside the
// image. Masked pixel values are never read.
Smoothed smooth_channel(const RawImage& img, int c, const std::vector<double>& kernel) {
  const int w = img.width();
  const int h = img.height();
  const int r = static_cast<int>(kernel.size() / 2);
  const std::size_t n = static_cast<std::size_t>(w) * h;

  std::vector<double> num_h(n, 0.0), den_h(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double num = 0.0, den = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int xs = x + k;
        if (xs < 0 || xs >= w || img.masked(xs, y)) continue;
        num += kernel[k + r] * img.at(xs, y, c);
        den += kernel[k + r];
      }
      num_h[static_cast<std::size_t>(y) * w + x] = num;
      den_h[static_cast<std::size_t>(y) * w + x] = den;
    }
  }

  Smoothed out{std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double num = 0.0, den = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int ys = y + k;
        if (ys < 0 || ys >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ys) * w + x;
        num += kernel[k + r] * num_h[j];
        den += kernel[k + r] * den_h[j];
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (den > 0.0) {
        out.value[i] = num / den;
        out.valid[i] = 1;
      }
    }
  }
  return out;
}

}  // namespace

IlluminantVec gray_world(const RawImage& img) { return shades_of_gray(img, 1.0); }

IlluminantVec shades_of_gray(const RawImage& img, double p) {
  require_order(p);
  const ChannelValues ch = gather_unmasked(img);
  return normalize(
      IlluminantVec(minkowski_mean(ch[0], p), minkowski_mean(ch[1], p), minkowski_mean(ch[2], p)));
}

IlluminantVec max_rgb(const RawImage& img) {
  const ChannelValues ch = gather_unmasked(img);
  Eigen::Vector3d m;
  for (int c = 0; c < 3; ++c) m[c] = *std::max_element(ch[c].begin(), ch[c].end());
  return normalize(IlluminantVec(m));
}

IlluminantVec gray_edge(const RawImage& img, int order, double p, double sigma) {
  require_order(p);
  if (order != 1 && order != 2) throw Error(ErrorCode::InvalidArgument, "gray edge order must be 1 or 2");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gray edge sigma must be positive");

  const int support = static_cast<int>(std::ceil(6.0 * sigma + 1.0));
  if (img.width() < support || img.height() < support) {
    throw Error(ErrorCode::TooSmall, "image smaller than the " + std::to_string(support) +
                                         "-pixel smoothing support");
  }
  if (img.unmasked_count() == 0) throw Error(ErrorCode::AllMasked, "image has no unmasked pixels");
  const int border = static_cast<int>(std::ceil(3.0 * sigma));
  const int w = img.width();
  const auto kernel = gaussian_kernel(sigma);

  double peak = 0.0;
  Eigen::Vector3d pooled;
  for (int c = 0; c < 3; ++c) {
    const Smoothed s = smooth_channel(img, c, kernel);
    auto at = [&](int x, int y) { return s.value[static_cast<std::size_t>(y) * w + x]; };
    auto ok = [&](int x, int y) { return s.valid[static_cast<std::size_t>(y) * w + x] != 0; };

    std::vector<double> mags;
    for (int y = border; y < img.height() - border; ++y) {
      for (int x = border; x < w - border; ++x) {
        if (img.masked(x, y)) continue;
        peak = std::max(peak, img.at(x, y, c));
        if (!ok(x, y) || !ok(x - 1, y) || !ok(x + 1, y) || !ok(x, y - 1) || !ok(x, y + 1)) continue;
        double mag;
        if (order == 1) {
          const double ix = 0.5 * (at(x + 1, y) - at(x - 1, y));
          const double iy = 0.5 * (at(x, y + 1) - at(x, y - 1));
          mag = std::sqrt(ix * ix + iy * iy);
        } else {
          if (!ok(x - 1, y - 1) || !ok(x + 1, y - 1) || !ok(x - 1, y + 1) || !ok(x + 1, y + 1)) continue;
          const double ixx = at(x + 1, y) - 2.0 * at(x, y) + at(x - 1, y);
          const double iyy = at(x, y + 1) - 2.0 * at(x, y) + at(x, y - 1);
          const double ixy =
              0.25 * (at(x + 1, y + 1) - at(x - 1, y + 1) - at(x + 1, y - 1) + at(x - 1, y - 1));
          mag = std::sqrt(ixx * ixx + 2.0 * ixy * ixy + iyy * iyy);
        }
        mags.push_back(mag);
      }
    }
    if (mags.empty()) throw Error(ErrorCode::TooSmall, "no pixel left for edge pooling");
    pooled[c] = minkowski_mean(mags, p);
  }
  // Smoothing round-off leaves ~1e-17 gradients on flat images.
  if (pooled.maxCoeff() <= 1e-10 * peak) throw Error(ErrorCode::ZeroVector, "image has no edges");
  return normalize(IlluminantVec(pooled));
}

IlluminantVec pca_bright_dark(const RawImage& img, double percent) {
  if (!(percent > 0.0 && percent <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "PCA percentage must lie in (0, 0.5]");
  }
  std::vector<Eigen::Vector3d> pix;
  pix.reserve(img.unmasked_count());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (!img.masked(x, y)) pix.push_back(img.pixel(x, y));
  if (pix.empty()) throw Error(ErrorCode::AllMasked, "image has no unmasked pixels");

  const std::size_t k = static_cast<std::size_t>(std::floor(percent * pix.size()));
  if (k == 0) throw Error(ErrorCode::SelectionEmpty, "too few pixels for the requested percentage");

  const Eigen::Vector3d mean_dir = gray_world(img).vec();
  std::vector<double> score(pix.size());
  for (std::size_t i = 0; i < pix.size(); ++i) score[i] = pix[i].dot(mean_dir);

  std::vector<std::size_t> order(pix.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score[a] < score[b] || (score[a] == score[b] && a < b);
  });

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < k; ++i) {
    const auto& lo = pix[order[i]];
    const auto& hi = pix[order[pix.size() - 1 - i]];
    scatter += lo * lo.transpose();
    scatter += hi * hi.transpose();
  }

  Eigen::Vector3d v = mean_dir;
  bool converged = false;
  for (int it = 0; it < 1000; ++it) {
    Eigen::Vector3d next = scatter * v;
    const double n = next.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::ZeroVector, "selected pixels are all black");
    next /= n;
    const double change = (next - v).norm();
    v = next;
    if (change < 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorCode::EigenFailure, "power iteration did not converge");
  if (v.sum() < 0.0) v = -v;
  return normalize(IlluminantVec(v));
}

IlluminantVec estimate(const RawImage& img, const EstimatorConfig& cfg) {
  switch (cfg.method) {
    case EstimatorMethod::GrayWorld: return gray_world(img);
    case EstimatorMethod::MaxRGB: return max_rgb(img);
    case EstimatorMethod::ShadesOfGray: return shades_of_gray(img, cfg.p);
    case EstimatorMethod::GrayEdge1: return gray_edge(img, 1, cfg.p, cfg.sigma);
    case EstimatorMethod::GrayEdge2: return gray_edge(img, 2, cfg.p, cfg.sigma);
    case EstimatorMethod::PcaBrightDark: return pca_bright_dark(img, cfg.pca_percent);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator");
}

}  // namespace illum
