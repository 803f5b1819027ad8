#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "illum/estimators.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace illum;

namespace {

RawImage uniform_image(int w, int h, const Eigen::Vector3d& c) {
  RawImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set_pixel(x, y, c);
  return img;
}

std::vector<EstimatorConfig> all_estimators() {
  std::vector<EstimatorConfig> out;
  for (auto m : {EstimatorMethod::GrayWorld, EstimatorMethod::MaxRGB, EstimatorMethod::ShadesOfGray,
                 EstimatorMethod::GrayEdge1, EstimatorMethod::GrayEdge2, EstimatorMethod::PcaBrightDark}) {
    out.push_back(EstimatorConfig::defaults_for(m));
  }
  return out;
}

double deg(const IlluminantVec& a, const Eigen::Vector3d& b) { return oracle::angle_deg(a.vec(), b); }

}  // namespace

TEST(Config, PublishedDefaults) {
  EXPECT_EQ(EstimatorConfig::defaults_for(EstimatorMethod::ShadesOfGray).p, 4.0);
  const auto ge = EstimatorConfig::defaults_for(EstimatorMethod::GrayEdge1);
  EXPECT_EQ(ge.p, 6.0);
  EXPECT_EQ(ge.sigma, 2.0);
  EXPECT_EQ(EstimatorConfig::defaults_for(EstimatorMethod::PcaBrightDark).pca_percent, 0.035);
  for (const auto& c : all_estimators()) EXPECT_EQ(parse_estimator(to_string(c.method)), c.method);
  expect_code(ErrorCode::InvalidArgument, [] { parse_estimator("nope"); });
}

TEST(GrayWorld, Examples) {
  EXPECT_LT(deg(gray_world(uniform_image(4, 3, {0.2, 0.4, 0.6})), {0.2, 0.4, 0.6}), 1e-12);
  RawImage two(2, 1);
  two.set_pixel(0, 0, {1, 0, 0});
  two.set_pixel(1, 0, {0, 1, 0});
  const auto gw = gray_world(two);
  EXPECT_NEAR(gw.r(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(gw.g(), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(gw.b(), 0.0);
  expect_code(ErrorCode::ZeroVector, [] { gray_world(uniform_image(2, 2, {0, 0, 0})); });
}

TEST(GrayWorld, MatchesMeanOracle) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    RawImage img = oracle::random_image(rng, 8, 8);
    if (i % 2) img.set_masked(3, 4, true);
    const Eigen::Vector3d ref = oracle::channel_mean(img).normalized();
    const auto gw = gray_world(img);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(gw[c], ref[c], 1e-12);
  }
}

TEST(GrayWorld, AllMasked) {
  RawImage img = uniform_image(20, 20, {0.5, 0.5, 0.5});
  apply_mask_rects(img, {{0, 0, 20, 20}});
  for (const auto& c : all_estimators()) {
    expect_code(ErrorCode::AllMasked, [&] { estimate(img, c); });
  }
}

TEST(ShadesOfGray, OrderOneIsGrayWorld) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    const RawImage img = oracle::random_image(rng, 9, 7);
    const auto a = shades_of_gray(img, 1.0);
    const auto b = gray_world(img);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
  }
}

TEST(ShadesOfGray, HighOrderApproachesMaxRgb) {
  std::mt19937_64 rng(23);
  RawImage img = oracle::random_image(rng, 16, 16, 0.05, 0.4);
  img.set_pixel(5, 5, {1.0, 0.3, 0.2});
  EXPECT_LT(angular_error(shades_of_gray(img, 64), max_rgb(img)).value, 1.0);
}

TEST(ShadesOfGray, UniformImageSameForEveryOrder) {
  const RawImage img = uniform_image(5, 5, {0.3, 0.5, 0.1});
  for (double p : {1.0, 2.0, 4.0, 8.0, 30.0}) {
    EXPECT_LT(deg(shades_of_gray(img, p), {0.3, 0.5, 0.1}), 1e-9) << p;
  }
  expect_code(ErrorCode::InvalidArgument, [&] { shades_of_gray(img, 0.5); });
}

TEST(ShadesOfGray, MatchesPowerMeanOracle) {
  std::mt19937_64 rng(24);
  const RawImage img = oracle::random_image(rng, 10, 10);
  Eigen::Vector3d ref = Eigen::Vector3d::Zero();
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x)
      for (int c = 0; c < 3; ++c) ref[c] += std::pow(img.at(x, y, c), 4.0);
  for (int c = 0; c < 3; ++c) ref[c] = std::pow(ref[c] / 100.0, 0.25);
  EXPECT_LT(deg(shades_of_gray(img, 4), ref), 1e-9);
}

TEST(MaxRgb, ExamplesAndOracle) {
  RawImage two(2, 1);
  two.set_pixel(0, 0, {1, 0, 0});
  two.set_pixel(1, 0, {0, 0.5, 0});
  EXPECT_LT(deg(max_rgb(two), {1, 0.5, 0}), 1e-12);
  EXPECT_LT(deg(max_rgb(uniform_image(3, 3, {0.1, 0.2, 0.3})), {0.1, 0.2, 0.3}), 1e-12);
  expect_code(ErrorCode::ZeroVector, [] { max_rgb(uniform_image(2, 2, {0, 0, 0})); });
  std::mt19937_64 rng(25);
  for (int i = 0; i < 20; ++i) {
    RawImage img = oracle::random_image(rng, 6, 9);
    img.set_pixel(2, 2, {1, 1, 1});
    img.set_masked(2, 2, true);
    const auto m = max_rgb(img);
    const Eigen::Vector3d ref = oracle::channel_max(img).normalized();
    for (int c = 0; c < 3; ++c) EXPECT_EQ(m[c], ref[c]);
  }
}

TEST(GrayEdge, ConstantImageHasNoEdges) {
  const RawImage img = uniform_image(32, 32, {0.4, 0.4, 0.4});
  expect_code(ErrorCode::ZeroVector, [&] { gray_edge(img, 1, 6, 2); });
  expect_code(ErrorCode::ZeroVector, [&] { gray_edge(img, 2, 6, 2); });
}

TEST(GrayEdge, StepEdgeInRedOnly) {
  RawImage img(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) img.set_pixel(x, y, x < 16 ? Eigen::Vector3d(1, 0, 0) : Eigen::Vector3d(0, 0, 0));
  for (int order : {1, 2}) EXPECT_LT(deg(gray_edge(img, order, 6, 2), {1, 0, 0}), 1e-9);
}

TEST(GrayEdge, RotationInvariant) {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 10; ++i) {
    const RawImage img = oracle::random_image(rng, 40, 27);
    const RawImage rot = oracle::rotate90(img);
    for (int order : {1, 2}) {
      EXPECT_LT(angular_error(gray_edge(img, order, 6, 2), gray_edge(rot, order, 6, 2)).value, 1e-9);
    }
  }
}

TEST(GrayEdge, TooSmall) {
  // sigma 2 needs ceil(6 * 2 + 1) = 13 pixels per side.
  std::mt19937_64 rng(27);
  expect_code(ErrorCode::TooSmall, [&] { gray_edge(oracle::random_image(rng, 12, 40), 1, 6, 2); });
  EXPECT_NO_THROW(gray_edge(oracle::random_image(rng, 13, 13), 1, 6, 2));
}

TEST(Pca, SingleColorImage) {
  std::mt19937_64 rng(28);
  RawImage img(20, 20);
  const Eigen::Vector3d c(0.3, 0.6, 0.2);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) img.set_pixel(x, y, oracle::uniform(rng, 0.1, 1.0) * c);
  EXPECT_LT(deg(pca_bright_dark(img, 0.035), c), 1e-9);
}

TEST(Pca, HalfSelectionIsFullScatter) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 20; ++i) {
    const RawImage img = oracle::random_image(rng, 10, 10);
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x) scatter += img.pixel(x, y) * img.pixel(x, y).transpose();
    EXPECT_LT(deg(pca_bright_dark(img, 0.5), oracle::dominant_eigenvector(scatter)), 1e-9);
  }
}

TEST(Pca, BrightAndDarkGrayClusters) {
  std::mt19937_64 rng(30);
  const Eigen::Vector3d l(0.7, 0.5, 0.3);
  RawImage img(30, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) {
      const double s = (x + y) % 2 ? oracle::uniform(rng, 0.8, 0.9) : oracle::uniform(rng, 0.1, 0.2);
      img.set_pixel(x, y, s * l);
    }
  EXPECT_LT(deg(pca_bright_dark(img, 0.035), l), 0.1);
}

TEST(Pca, SelectionErrors) {
  std::mt19937_64 rng(31);
  expect_code(ErrorCode::SelectionEmpty, [&] { pca_bright_dark(oracle::random_image(rng, 5, 5), 0.035); });
  expect_code(ErrorCode::InvalidArgument, [&] { pca_bright_dark(oracle::random_image(rng, 5, 5), 0.7); });
}

TEST(Invariants, ExposureScale) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 20; ++i) {
    const RawImage img = oracle::random_image(rng, 40, 32);
    const double alpha = oracle::uniform(rng, 0.01, 1.0);
    for (const auto& c : all_estimators()) {
      EXPECT_LT(angular_error(estimate(img, c), estimate(img.scaled(alpha), c)).value, 1e-6) << to_string(c.method);
    }
  }
}

TEST(Invariants, MaskedPixelsNeverRead) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    RawImage img = oracle::random_image(rng, 40, 32);
    apply_mask_rects(img, {{10, 8, 9, 7}, {30, 0, 10, 3}});
    RawImage junk = img;
    for (int y = 0; y < junk.height(); ++y)
      for (int x = 0; x < junk.width(); ++x)
        if (junk.masked(x, y)) junk.set_pixel(x, y, {oracle::uniform(rng), oracle::uniform(rng), oracle::uniform(rng)});
    for (const auto& c : all_estimators()) {
      EXPECT_EQ(estimate(img, c), estimate(junk, c)) << to_string(c.method);
    }
  }
}

TEST(Invariants, AchromaticMeanSceneRecoversIlluminant) {
  std::mt19937_64 rng(34);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d l(oracle::uniform(rng, 0.1, 1), oracle::uniform(rng, 0.1, 1), oracle::uniform(rng, 0.1, 1));
    RawImage img(12, 9);
    std::vector<Eigen::Vector3d> refl;
    for (int g = 0; g < 12 * 9 / 3; ++g) {
      const double a = oracle::uniform(rng), b = oracle::uniform(rng), c = oracle::uniform(rng);
      refl.push_back({a, b, c});
      refl.push_back({b, c, a});
      refl.push_back({c, a, b});
    }
    std::shuffle(refl.begin(), refl.end(), rng);
    for (int p = 0; p < 12 * 9; ++p) img.set_pixel(p % 12, p / 12, refl[p].cwiseProduct(l) / l.maxCoeff());
    EXPECT_LT(deg(gray_world(img), l), 1e-6);
  }
}
