#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "illum/color.hpp"
#include "illum/image.hpp"

namespace illum {

struct SampleRecord {
  std::string image_path;  // absolute once loaded through load_manifest
  IlluminantVec gt_illuminant;
  ChannelLevels black_level{0, 0, 0};
  ChannelLevels saturation_level{65535, 65535, 65535};
  std::vector<MaskRect> mask_rects;
  std::string camera_id;
  int fold = 0;  // 1..3; 0 = no label
};

struct DatasetManifest {
  std::string name;
  std::vector<SampleRecord> records;
};

struct ImageSize {
  int width = 384;
  int height = 256;
};

/// Reads the manifest CSV (header row required, columns: image_path, gt_r,
/// gt_g, gt_b, black_r, black_g, black_b, sat_r, sat_g, sat_b, mask,
/// camera_id, fold). Relative image paths resolve against the manifest's
/// directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Parses manifest text; `base_dir` anchors relative image paths. Image
/// existence is checked only when `check_images` is set.
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                               bool check_images = true);

/// Writes `manifest` as CSV. Image paths are written relative to the
/// manifest's directory when they live below it.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Black/saturation normalization, chart masking, then area resize.
RawImage load_sample(const SampleRecord& rec, ImageSize target = {});
RawImage prepare_sample(const Raw16Image& raw, const SampleRecord& rec, ImageSize target = {});

struct FoldSplit {
  std::string camera_id;
  int fold = 0;  // the held-out fold
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> test;
};

/// Per camera (sorted by id) and per fold f = 1..k: test = records with
/// fold == f, train = the camera's remaining records.
std::vector<FoldSplit> split_folds(const DatasetManifest& manifest, int k = 3);

std::string format_mask_rects(const std::vector<MaskRect>& rects);
std::vector<MaskRect> parse_mask_rects(const std::string& text);

}  // namespace illum
