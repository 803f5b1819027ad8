#include "illum/image_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <png.h>
#include <tiffio.h>

namespace illum {

namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  return FilePtr(std::fopen(path.c_str(), mode), &std::fclose);
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Raw16Image read_png16(const std::filesystem::path& path) {
  FilePtr fp = open_file(path, "rb");
  if (!fp) throw Error(ErrorCode::MissingImage, path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::DecodeError, "libpng initialization failed");
  }
  Raw16Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::DecodeError, "corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const auto bit_depth = png_get_bit_depth(png, info);
  const auto color_type = png_get_color_type(png, info);
  if (bit_depth != 16 || color_type != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::DecodeError, "expected a 16-bit RGB PNG: " + path.string());
  }
  png_set_swap(png);  // PNG stores big-endian samples
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  rows.resize(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void silence_tiff(const char*, const char*, va_list) {}

Raw16Image read_tiff16_file(const std::filesystem::path& path) {
  TIFFSetErrorHandler(silence_tiff);
  TIFFSetWarningHandler(silence_tiff);
  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "r"), &TIFFClose);
  if (!tif) throw Error(ErrorCode::DecodeError, "not a readable PNG or TIFF: " + path.string());

  uint32_t w = 0, h = 0;
  uint16_t bps = 0, spp = 0, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
  if (bps != 16 || spp != 3 || planar != PLANARCONFIG_CONTIG || w == 0 || h == 0) {
    throw Error(ErrorCode::DecodeError, "expected a 16-bit interleaved RGB TIFF: " + path.string());
  }
  Raw16Image img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.data.resize(static_cast<std::size_t>(w) * h * 3);
  if (static_cast<std::size_t>(TIFFScanlineSize(tif.get())) != static_cast<std::size_t>(w) * 3 * 2) {
    throw Error(ErrorCode::DecodeError, "unexpected TIFF scanline size: " + path.string());
  }
  for (uint32_t y = 0; y < h; ++y) {
    if (TIFFReadScanline(tif.get(), img.data.data() + static_cast<std::size_t>(y) * w * 3, y) < 0) {
      throw Error(ErrorCode::DecodeError, "corrupt TIFF scanline: " + path.string());
    }
  }
  return img;
}

}  // namespace

Raw16Image read_image16(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::MissingImage, path.string());
  if (has_png_signature(path)) return read_png16(path);
  return read_tiff16_file(path);
}

void write_png16(const std::filesystem::path& path, const Raw16Image& img) {
  FilePtr fp = open_file(path, "wb");
  if (!fp) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_tiff16(const std::filesystem::path& path, const Raw16Image& img) {
  std::unique_ptr<TIFF, void (*)(TIFF*)> tif(TIFFOpen(path.c_str(), "w"), &TIFFClose);
  if (!tif) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<uint32_t>(img.width));
  TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<uint32_t>(img.height));
  TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 16);
  TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 3);
  TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, 1);
  for (int y = 0; y < img.height; ++y) {
    auto* row = const_cast<std::uint16_t*>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3);
    if (TIFFWriteScanline(tif.get(), row, static_cast<uint32_t>(y)) < 0) {
      throw Error(ErrorCode::IoError, "TIFF encoding failed: " + path.string());
    }
  }
}

Raw16Image to_raw16(const RawImage& img) {
  Raw16Image out;
  out.width = img.width();
  out.height = img.height();
  out.data.resize(img.data().size());
  std::transform(img.data().begin(), img.data().end(), out.data.begin(), [](double v) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
  });
  return out;
}

}  // namespace illum
