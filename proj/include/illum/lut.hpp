#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "illum/projective.hpp"

namespace illum {

struct ChromaBounds {
  double u1_min = 0.0;
  double u1_max = 1.0;
  double u2_min = 0.0;
  double u2_max = 1.0;
  friend bool operator==(const ChromaBounds&, const ChromaBounds&) = default;
};

/// L x L grid of APAP transforms over (u1, u2) chromaticity. Node (i, j) sits
/// at (u1_min + i * du1, u2_min + j * du2) and is stored at index i * L + j.
struct LutGrid {
  int size = 16;
  ChromaBounds bounds;
  std::vector<ProjectiveTransform> nodes;
  std::string method_tag;
  std::string camera_tag;

  const ProjectiveTransform& node(int i, int j) const { return nodes[static_cast<std::size_t>(i) * size + j]; }
  Chromaticity2D node_chromaticity(int i, int j) const;

  friend bool operator==(const LutGrid&, const LutGrid&) = default;
};

struct LutBuildResult {
  LutGrid grid;
  /// Nodes whose APAP fit failed or did not converge; they hold the global
  /// transform instead (failed) or the last iterate (non-converged).
  std::vector<int> failed_nodes;
  std::vector<int> unconverged_nodes;
};

LutBuildResult build_lut(const TrainingCorpus& corpus, int size = 16, const ChromaBounds& bounds = {},
                         const ApapConfig& apap = {}, const AlsConfig& als = {}, int threads = 0);

/// The enclosing cell of a (clamped) chromaticity and the bilinear weights of
/// its corners, ordered (i0, j0), (i0+1, j0), (i0, j0+1), (i0+1, j0+1).
struct CellWeights {
  int i0 = 0;
  int j0 = 0;
  std::array<double, 4> w{};
};
CellWeights cell_weights(const LutGrid& grid, const Chromaticity2D& c);

/// Bilinear blend of the four corner corrections of est, normalized.
CorrectedIlluminant query(const LutGrid& grid, const IlluminantVec& est);

/// Number of bytes taken by the node matrices alone (L * L * 9 * 8).
std::size_t lut_payload_bytes(int size);
constexpr std::size_t kLutHeaderBytes = 64;

std::vector<std::uint8_t> serialize(const LutGrid& grid);
LutGrid deserialize(const std::vector<std::uint8_t>& bytes);

std::string lut_to_json(const LutGrid& grid);
LutGrid lut_from_json(std::string_view text);

}  // namespace illum
