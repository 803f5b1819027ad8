#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "illum/image.hpp"
#include "illum/image_codec.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace illum;

namespace {

Raw16Image raw_filled(int w, int h, std::uint16_t v) {
  Raw16Image r;
  r.width = w;
  r.height = h;
  r.data.assign(static_cast<std::size_t>(w) * h * 3, v);
  return r;
}

}  // namespace

TEST(NormalizeRaw, Levels) {
  Raw16Image r = raw_filled(3, 1, 0);
  r.at(0, 0, 0) = 100;
  r.at(1, 0, 0) = 1100;
  r.at(2, 0, 0) = 600;
  r.at(0, 0, 1) = 50;     // below black clamps to 0
  r.at(1, 0, 1) = 65535;  // above saturation clamps to 1
  const RawImage img = normalize_raw(r, {100, 100, 100}, {1100, 1100, 1100});
  EXPECT_EQ(img.at(0, 0, 0), 0.0);
  EXPECT_EQ(img.at(1, 0, 0), 1.0);
  EXPECT_EQ(img.at(2, 0, 0), 0.5);
  EXPECT_EQ(img.at(0, 0, 1), 0.0);
  EXPECT_EQ(img.at(1, 0, 1), 1.0);
}

TEST(NormalizeRaw, PerChannelAndBadLevels) {
  Raw16Image r = raw_filled(1, 1, 600);
  const RawImage img = normalize_raw(r, {100, 200, 0}, {1100, 1000, 1200});
  EXPECT_EQ(img.at(0, 0, 0), 0.5);
  EXPECT_EQ(img.at(0, 0, 1), 0.5);
  EXPECT_EQ(img.at(0, 0, 2), 0.5);
  expect_code(ErrorCode::BadLevels, [&] { normalize_raw(r, {0, 0, 10}, {100, 100, 10}); });
}

TEST(Downsample, UniformAndShape) {
  RawImage img(2, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) img.set_pixel(x, y, {0.2, 0.4, 0.6});
  const RawImage one = downsample(img, 1, 1);
  EXPECT_DOUBLE_EQ(one.at(0, 0, 0), 0.2);
  EXPECT_DOUBLE_EQ(one.at(0, 0, 1), 0.4);
  EXPECT_DOUBLE_EQ(one.at(0, 0, 2), 0.6);

  std::mt19937_64 rng(3);
  for (auto [w, h] : {std::pair{1000, 700}, std::pair{200, 100}, std::pair{384, 256}}) {
    const RawImage out = downsample(oracle::random_image(rng, w, h), 384, 256);
    EXPECT_EQ(out.width(), 384);
    EXPECT_EQ(out.height(), 256);
  }
}

TEST(Downsample, Checkerboard) {
  RawImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const double v = (x + y) % 2;
      img.set_pixel(x, y, {v, v, v});
    }
  const RawImage out = downsample(img, 2, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.at(x, y, c), 0.5);
}

TEST(Downsample, NonIntegerFactorMatchesAreaOracle) {
  // 3 -> 2 along x: output 0 covers [0, 1.5), output 1 covers [1.5, 3).
  RawImage img(3, 1);
  img.set_pixel(0, 0, {0.3, 0.3, 0.3});
  img.set_pixel(1, 0, {0.6, 0.6, 0.6});
  img.set_pixel(2, 0, {0.9, 0.9, 0.9});
  const RawImage out = downsample(img, 2, 1);
  EXPECT_NEAR(out.at(0, 0, 0), (0.3 * 1.0 + 0.6 * 0.5) / 1.5, 1e-15);
  EXPECT_NEAR(out.at(1, 0, 0), (0.6 * 0.5 + 0.9 * 1.0) / 1.5, 1e-15);
}

TEST(Downsample, MaskedPixelsExcluded) {
  RawImage img(4, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x) img.set_pixel(x, y, {0.25, 0.25, 0.25});
  // Left 2x2 block fully masked; in the right block one pixel masked with junk.
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      img.set_pixel(x, y, {1, 1, 1});
      img.set_masked(x, y, true);
    }
  img.set_pixel(3, 1, {0.9, 0.0, 0.9});
  img.set_masked(3, 1, true);
  const RawImage out = downsample(img, 2, 1);
  EXPECT_TRUE(out.masked(0, 0));
  EXPECT_FALSE(out.masked(1, 0));
  EXPECT_DOUBLE_EQ(out.at(1, 0, 1), 0.25);
}

TEST(MaskRects, ClippedToImage) {
  RawImage img(5, 5);
  apply_mask_rects(img, {{3, 3, 10, 10}, {-2, -2, 3, 3}});
  EXPECT_TRUE(img.masked(4, 4));
  EXPECT_TRUE(img.masked(3, 3));
  EXPECT_TRUE(img.masked(0, 0));
  EXPECT_FALSE(img.masked(1, 1));
  EXPECT_EQ(img.unmasked_count(), 25u - 4u - 1u);
}

TEST(RawImage, InvalidSize) {
  expect_code(ErrorCode::InvalidArgument, [] { RawImage(0, 3); });
}

TEST(Codec, PngAndTiffRoundTrip) {
  oracle::TempDir dir("codec");
  std::mt19937_64 rng(9);
  Raw16Image r = raw_filled(7, 5, 0);
  for (auto& v : r.data) v = static_cast<std::uint16_t>(rng() & 0xFFFF);
  write_png16(dir.path() / "a.png", r);
  write_tiff16(dir.path() / "a.tiff", r);
  const Raw16Image p = read_image16(dir.path() / "a.png");
  const Raw16Image t = read_image16(dir.path() / "a.tiff");
  EXPECT_EQ(p.width, 7);
  EXPECT_EQ(p.height, 5);
  EXPECT_EQ(p.data, r.data);
  EXPECT_EQ(t.data, r.data);
}

TEST(Codec, Errors) {
  oracle::TempDir dir("codec_err");
  expect_code(ErrorCode::MissingImage, [&] { read_image16(dir.path() / "none.png"); });
  {
    std::ofstream f(dir.path() / "junk.png");
    f << "not an image";
  }
  expect_code(ErrorCode::DecodeError, [&] { read_image16(dir.path() / "junk.png"); });
}

TEST(Codec, QuantizeRoundsToNearest) {
  RawImage img(1, 1);
  img.set_pixel(0, 0, {0.0, 0.5, 1.0});
  const Raw16Image r = to_raw16(img);
  EXPECT_EQ(r.data[0], 0);
  EXPECT_EQ(r.data[1], 32768);
  EXPECT_EQ(r.data[2], 65535);
}
