#include "illum/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "illum/image_codec.hpp"

namespace illum {

namespace {

const std::vector<std::string> kColumns = {"image_path", "gt_r",  "gt_g",  "gt_b", "black_r",
                                           "black_g",    "black_b", "sat_r", "sat_g", "sat_b",
                                           "mask",       "camera_id", "fold"};

[[noreturn]] void parse_fail(std::size_t row, const std::string& column, const std::string& msg) {
  throw Error(ErrorCode::ParseError,
              "row " + std::to_string(row) + (column.empty() ? "" : ", column '" + column + "'") + ": " + msg);
}

// RFC 4180 records: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) i = 3;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.push_back(std::move(row));
    row.clear();
  };

  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_row();
    } else if (ch == '\r') {
      // tolerate CRLF
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, "unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, std::size_t row, const std::string& col) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    parse_fail(row, col, "'" + s + "' is not a number");
  }
  return v;
}

int to_int(const std::string& s, std::size_t row, const std::string& col) {
  const std::string t = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    parse_fail(row, col, "'" + s + "' is not an integer");
  }
  return v;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return out + "\"";
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<MaskRect> parse_mask_rects(const std::string& text) {
  std::vector<MaskRect> rects;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<int> v;
    std::stringstream is(item);
    std::string num;
    while (std::getline(is, num, ',')) {
      const std::string t = trim(num);
      int x = 0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorCode::ParseError, "bad mask rectangle '" + item + "'");
      }
      v.push_back(x);
    }
    if (v.size() != 4 || v[2] < 0 || v[3] < 0) {
      throw Error(ErrorCode::ParseError, "mask rectangle must be x,y,w,h: '" + item + "'");
    }
    rects.push_back({v[0], v[1], v[2], v[3]});
  }
  return rects;
}

std::string format_mask_rects(const std::vector<MaskRect>& rects) {
  std::string out;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    if (i) out += ';';
    const auto& r = rects[i];
    out += std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
           std::to_string(r.h);
  }
  return out;
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                               bool check_images) {
  const auto rows = read_csv(text);
  if (rows.empty()) throw Error(ErrorCode::ParseError, "empty manifest");

  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < rows[0].size(); ++c) col[trim(rows[0][c])] = c;
  for (const auto& name : kColumns) {
    if (!col.count(name)) parse_fail(1, name, "missing header column");
  }

  DatasetManifest m;
  m.name = base_dir.filename().string();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;  // 1-based, header is row 1
    auto get = [&](const std::string& name) -> const std::string& {
      const std::size_t c = col.at(name);
      if (c >= row.size()) parse_fail(line, name, "missing field");
      return row[c];
    };

    SampleRecord rec;
    std::filesystem::path p = trim(get("image_path"));
    if (p.empty()) parse_fail(line, "image_path", "empty path");
    if (p.is_relative()) p = base_dir / p;
    rec.image_path = p.lexically_normal().string();

    rec.gt_illuminant = IlluminantVec(to_double(get("gt_r"), line, "gt_r"), to_double(get("gt_g"), line, "gt_g"),
                                      to_double(get("gt_b"), line, "gt_b"));
    if (!(rec.gt_illuminant.r() >= 0 && rec.gt_illuminant.g() >= 0 && rec.gt_illuminant.b() >= 0) ||
        rec.gt_illuminant.vec().norm() == 0.0) {
      parse_fail(line, "gt_r", "ground-truth illuminant must be non-negative and non-zero");
    }
    rec.gt_illuminant = normalize(rec.gt_illuminant);
    const char* bl[] = {"black_r", "black_g", "black_b"};
    const char* sl[] = {"sat_r", "sat_g", "sat_b"};
    for (int c = 0; c < 3; ++c) {
      rec.black_level[c] = to_int(get(bl[c]), line, bl[c]);
      rec.saturation_level[c] = to_int(get(sl[c]), line, sl[c]);
      if (rec.saturation_level[c] <= rec.black_level[c]) {
        throw Error(ErrorCode::InvalidLevels, "row " + std::to_string(line) + ": saturation level " +
                                                  std::to_string(rec.saturation_level[c]) +
                                                  " does not exceed black level " +
                                                  std::to_string(rec.black_level[c]));
      }
    }
    try {
      rec.mask_rects = parse_mask_rects(get("mask"));
    } catch (const Error& e) {
      parse_fail(line, "mask", e.what());
    }
    rec.camera_id = trim(get("camera_id"));
    const std::string fold = trim(get("fold"));
    if (!fold.empty()) {
      rec.fold = to_int(fold, line, "fold");
      if (rec.fold < 1 || rec.fold > 3) parse_fail(line, "fold", "fold must be 1, 2 or 3");
    }
    if (check_images && !std::filesystem::is_regular_file(p)) {
      throw Error(ErrorCode::MissingImage, "row " + std::to_string(line) + ": " + rec.image_path);
    }
    m.records.push_back(std::move(rec));
  }
  if (m.records.empty()) throw Error(ErrorCode::ParseError, "manifest has a header but no records");
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingImage, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  DatasetManifest m = parse_manifest(ss.str(), base);
  m.name = path.stem().string();
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& r : manifest.records) {
    std::filesystem::path p = r.image_path;
    if (p.is_absolute()) {
      const auto rel = std::filesystem::absolute(p).lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out << csv_escape(p.generic_string());
    for (int c = 0; c < 3; ++c) out << ',' << format_double(r.gt_illuminant[c]);
    for (int c = 0; c < 3; ++c) out << ',' << r.black_level[c];
    for (int c = 0; c < 3; ++c) out << ',' << r.saturation_level[c];
    out << ',' << csv_escape(format_mask_rects(r.mask_rects));
    out << ',' << csv_escape(r.camera_id);
    out << ',' << (r.fold > 0 ? std::to_string(r.fold) : std::string());
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

RawImage prepare_sample(const Raw16Image& raw, const SampleRecord& rec, ImageSize target) {
  RawImage img = normalize_raw(raw, rec.black_level, rec.saturation_level);
  apply_mask_rects(img, rec.mask_rects);
  if (img.unmasked_count() == 0) throw Error(ErrorCode::AllMasked, rec.image_path);
  return downsample(img, target.width, target.height);
}

RawImage load_sample(const SampleRecord& rec, ImageSize target) {
  return prepare_sample(read_image16(rec.image_path), rec, target);
}

std::vector<FoldSplit> split_folds(const DatasetManifest& manifest, int k) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");
  std::map<std::string, std::vector<const SampleRecord*>> by_camera;
  for (const auto& r : manifest.records) {
    if (r.fold < 1 || r.fold > k) {
      throw Error(ErrorCode::MissingFoldLabel, r.image_path + " has no fold label in 1.." + std::to_string(k));
    }
    by_camera[r.camera_id].push_back(&r);
  }
  std::vector<FoldSplit> splits;
  for (const auto& [camera, recs] : by_camera) {
    for (int f = 1; f <= k; ++f) {
      FoldSplit s;
      s.camera_id = camera;
      s.fold = f;
      for (const SampleRecord* r : recs) (r->fold == f ? s.test : s.train).push_back(*r);
      splits.push_back(std::move(s));
    }
  }
  return splits;
}

}  // namespace illum
