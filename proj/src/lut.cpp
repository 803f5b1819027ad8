#include "illum/lut.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <optional>

#include <json.hpp>
#include <zlib.h>

#include "parallel.hpp"

namespace illum {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'A', 'P', 'L', 'U'};
constexpr std::uint32_t kVersion = 1;

void validate_grid_shape(int size, const ChromaBounds& b) {
  if (size < 2) throw Error(ErrorCode::InvalidArgument, "LUT needs at least 2 nodes per axis");
  if (size > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "LUT size does not fit in 16 bits");
  if (!(b.u1_max > b.u1_min) || !(b.u2_max > b.u2_min)) {
    throw Error(ErrorCode::InvalidArgument, "LUT bounds must span a positive range");
  }
}

}  // namespace

Chromaticity2D LutGrid::node_chromaticity(int i, int j) const {
  const double du1 = (bounds.u1_max - bounds.u1_min) / (size - 1);
  const double du2 = (bounds.u2_max - bounds.u2_min) / (size - 1);
  return {bounds.u1_min + i * du1, bounds.u2_min + j * du2};
}

LutBuildResult build_lut(const TrainingCorpus& corpus, int size, const ChromaBounds& bounds,
                         const ApapConfig& apap, const AlsConfig& als, int threads) {
  validate_grid_shape(size, bounds);
  validate(apap);
  validate(als);

  LutBuildResult out;
  out.grid.size = size;
  out.grid.bounds = bounds;
  out.grid.method_tag = corpus.method_tag();
  out.grid.camera_tag = corpus.camera_tag();
  out.grid.nodes.resize(static_cast<std::size_t>(size) * size);

  enum class Status : std::uint8_t { Ok, Unconverged, Failed };
  std::vector<Status> status(out.grid.nodes.size(), Status::Ok);

  detail::parallel_for(out.grid.nodes.size(), threads, [&](std::size_t k) {
    const int i = static_cast<int>(k) / size;
    const int j = static_cast<int>(k) % size;
    const IlluminantVec node_illum = from_chromaticity(out.grid.node_chromaticity(i, j));
    try {
      AlsResult fit = fit_apap(node_illum, corpus, apap, als);
      out.grid.nodes[k] = fit.transform;
      if (!fit.converged) status[k] = Status::Unconverged;
    } catch (const Error&) {
      status[k] = Status::Failed;
    }
  });

  std::optional<ProjectiveTransform> global;
  for (std::size_t k = 0; k < status.size(); ++k) {
    if (status[k] == Status::Failed) {
      if (!global) global = fit_global(corpus, als).transform;
      out.grid.nodes[k] = *global;
      out.failed_nodes.push_back(static_cast<int>(k));
    } else if (status[k] == Status::Unconverged) {
      out.unconverged_nodes.push_back(static_cast<int>(k));
    }
  }
  return out;
}

CellWeights cell_weights(const LutGrid& grid, const Chromaticity2D& c) {
  const auto& b = grid.bounds;
  const int cells = grid.size - 1;
  auto locate = [&](double u, double lo, double hi, int& idx, double& frac) {
    const double t = (std::clamp(u, lo, hi) - lo) / (hi - lo) * cells;
    idx = std::clamp(static_cast<int>(std::floor(t)), 0, cells - 1);
    frac = std::clamp(t - idx, 0.0, 1.0);
  };
  CellWeights cw;
  double f1 = 0.0, f2 = 0.0;
  locate(c.u1, b.u1_min, b.u1_max, cw.i0, f1);
  locate(c.u2, b.u2_min, b.u2_max, cw.j0, f2);
  cw.w = {(1.0 - f1) * (1.0 - f2), f1 * (1.0 - f2), (1.0 - f1) * f2, f1 * f2};
  return cw;
}

CorrectedIlluminant query(const LutGrid& grid, const IlluminantVec& est) {
  const CellWeights cw = cell_weights(grid, to_chromaticity(est));
  const std::array<const ProjectiveTransform*, 4> corner = {
      &grid.node(cw.i0, cw.j0), &grid.node(cw.i0 + 1, cw.j0), &grid.node(cw.i0, cw.j0 + 1),
      &grid.node(cw.i0 + 1, cw.j0 + 1)};

  Eigen::Vector3d blended = Eigen::Vector3d::Zero();
  double ref = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (cw.w[k] == 0.0) continue;
    blended += cw.w[k] * (corner[k]->m * est.vec());
    ref = std::max(ref, corner[k]->m.norm());
  }
  return finish_correction(blended, ref * est.vec().norm());
}

std::size_t lut_payload_bytes(int size) {
  return static_cast<std::size_t>(size) * static_cast<std::size_t>(size) * 9 * sizeof(double);
}

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void tag(const std::string& s) {
    if (s.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "provenance tag longer than 65535 bytes");
    le(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b, std::size_t end) : buf_(b), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw Error(ErrorCode::TruncatedStream, "LUT stream ends early");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(buf_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string tag() {
    const auto n = le<std::uint16_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; LUT files are far below 4 GiB.
  crc = crc32(crc, data, static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

// Layout (little-endian):
//   0  "APLU"            4 bytes
//   4  version           u32 = 1
//   8  L                 u16
//  10  reserved          u16 = 0
//  12  bounds            4 x f64 (u1_min, u1_max, u2_min, u2_max)
//  44  payload bytes     u32 = L * L * 72
//  48  reserved          16 zero bytes
//  64  method tag, camera tag   u16 length + UTF-8 each
//      node payload      L * L * 9 f64, node (i, j) at i * L + j, matrices row-major
//      CRC-32            u32 over every preceding byte
std::vector<std::uint8_t> serialize(const LutGrid& grid) {
  validate_grid_shape(grid.size, grid.bounds);
  if (grid.nodes.size() != static_cast<std::size_t>(grid.size) * grid.size) {
    throw Error(ErrorCode::InvalidArgument, "LUT node count does not match its size");
  }
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.le(kVersion);
  w.le(static_cast<std::uint16_t>(grid.size));
  w.le(std::uint16_t{0});
  w.f64(grid.bounds.u1_min);
  w.f64(grid.bounds.u1_max);
  w.f64(grid.bounds.u2_min);
  w.f64(grid.bounds.u2_max);
  w.le(static_cast<std::uint32_t>(lut_payload_bytes(grid.size)));
  for (int i = 0; i < 16; ++i) w.le(std::uint8_t{0});
  w.tag(grid.method_tag);
  w.tag(grid.camera_tag);
  for (const auto& node : grid.nodes)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w.f64(node.m(r, c));
  auto& buf = w.buffer();
  w.le(crc32_of(buf.data(), buf.size()));
  return std::move(buf);
}

LutGrid deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size()) throw Error(ErrorCode::TruncatedStream, "LUT stream shorter than its magic");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "not an APLU lookup table");
  }
  Reader r(bytes, bytes.size());
  r.skip(kMagic.size());
  const auto version = r.le<std::uint32_t>();
  if (version != kVersion) throw Error(ErrorCode::BadVersion, "unsupported APLU version " + std::to_string(version));

  LutGrid grid;
  grid.size = r.le<std::uint16_t>();
  r.le<std::uint16_t>();
  grid.bounds.u1_min = r.f64();
  grid.bounds.u1_max = r.f64();
  grid.bounds.u2_min = r.f64();
  grid.bounds.u2_max = r.f64();
  const auto payload = r.le<std::uint32_t>();
  r.skip(16);
  grid.method_tag = r.tag();
  grid.camera_tag = r.tag();
  if (payload != lut_payload_bytes(grid.size)) {
    throw Error(ErrorCode::TruncatedStream, "payload length disagrees with grid size");
  }
  r.need(payload + sizeof(std::uint32_t));
  const std::size_t crc_at = r.pos() + payload;
  const std::uint32_t expected = crc32_of(bytes.data(), crc_at);

  grid.nodes.resize(static_cast<std::size_t>(grid.size) * grid.size);
  for (auto& node : grid.nodes)
    for (int row = 0; row < 3; ++row)
      for (int c = 0; c < 3; ++c) node.m(row, c) = r.f64();
  if (r.le<std::uint32_t>() != expected) throw Error(ErrorCode::ChecksumMismatch, "APLU checksum mismatch");
  validate_grid_shape(grid.size, grid.bounds);
  return grid;
}

std::string lut_to_json(const LutGrid& grid) {
  nlohmann::json j;
  j["format"] = "APLU";
  j["version"] = kVersion;
  j["L"] = grid.size;
  j["bounds"] = {grid.bounds.u1_min, grid.bounds.u1_max, grid.bounds.u2_min, grid.bounds.u2_max};
  j["method"] = grid.method_tag;
  j["camera"] = grid.camera_tag;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : grid.nodes) {
    std::vector<double> m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m.push_back(node.m(r, c));
    nodes.push_back(m);
  }
  j["nodes"] = nodes;
  return j.dump(1);
}

LutGrid lut_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LutGrid grid;
    grid.size = j.at("L").get<int>();
    const auto b = j.at("bounds").get<std::vector<double>>();
    if (b.size() != 4) throw Error(ErrorCode::ParseError, "bounds need 4 entries");
    grid.bounds = {b[0], b[1], b[2], b[3]};
    validate_grid_shape(grid.size, grid.bounds);
    grid.method_tag = j.value("method", "");
    grid.camera_tag = j.value("camera", "");
    const auto& nodes = j.at("nodes");
    if (nodes.size() != static_cast<std::size_t>(grid.size) * grid.size) {
      throw Error(ErrorCode::ParseError, "node count does not match L");
    }
    for (const auto& n : nodes) {
      const auto m = n.get<std::vector<double>>();
      if (m.size() != 9) throw Error(ErrorCode::ParseError, "node matrix needs 9 entries");
      ProjectiveTransform t;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.m(r, c) = m[r * 3 + c];
      grid.nodes.push_back(t);
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("LUT JSON: ") + e.what());
  }
}

}  // namespace illum
