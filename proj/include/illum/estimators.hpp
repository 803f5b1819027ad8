#pragma once

#include <string>
#include <string_view>

#include "illum/color.hpp"
#include "illum/image.hpp"

namespace illum {

enum class EstimatorMethod { GrayWorld, MaxRGB, ShadesOfGray, GrayEdge1, GrayEdge2, PcaBrightDark };

struct EstimatorConfig {
  EstimatorMethod method = EstimatorMethod::GrayWorld;
  double p = 4.0;               // Minkowski order; SoG uses 4, gray edge uses 6
  double sigma = 2.0;           // gray edge pre-blur, pixels
  double pca_percent = 0.035;   // fraction of brightest and darkest pixels

  /// Defaults of the published evaluation for the given method.
  static EstimatorConfig defaults_for(EstimatorMethod method);
};

/// Short CLI/report name: gw, maxrgb, sog, ge1, ge2, pca.
std::string_view to_string(EstimatorMethod m);
EstimatorMethod parse_estimator(std::string_view name);

IlluminantVec gray_world(const RawImage& img);
IlluminantVec shades_of_gray(const RawImage& img, double p);
IlluminantVec max_rgb(const RawImage& img);

/// Minkowski-p pooled derivative magnitude of the Gaussian-smoothed channels.
/// order 1: sqrt(Ix^2 + Iy^2); order 2: sqrt(Ixx^2 + 2 Ixy^2 + Iyy^2).
/// A border of ceil(3 sigma) pixels and every masked pixel are left out of
/// the pool; masked pixels also never feed the smoothing.
IlluminantVec gray_edge(const RawImage& img, int order, double p, double sigma);

/// Dominant eigenvector of the uncentered scatter of the brightest and
/// darkest `percent` of pixels, ranked by projection on the mean color.
IlluminantVec pca_bright_dark(const RawImage& img, double percent);

IlluminantVec estimate(const RawImage& img, const EstimatorConfig& cfg);

}  // namespace illum
