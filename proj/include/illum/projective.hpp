#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "illum/color.hpp"
#include "illum/image.hpp"

namespace illum {

/// 3x3 matrix acting on illuminant rays. Equality is only up to scale; fitted
/// transforms are stored with unit Frobenius norm.
struct ProjectiveTransform {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  static ProjectiveTransform identity() { return {}; }
  friend bool operator==(const ProjectiveTransform& a, const ProjectiveTransform& b) {
    return a.m == b.m;
  }
};

/// Paired (estimate, ground truth) illuminants. Both are stored unit-normalized.
class TrainingCorpus {
 public:
  TrainingCorpus() = default;
  TrainingCorpus(const std::vector<IlluminantVec>& estimates, const std::vector<IlluminantVec>& truths,
                 std::string method_tag = {}, std::string camera_tag = {});

  std::size_t size() const { return estimates_.size(); }
  const std::vector<IlluminantVec>& estimates() const { return estimates_; }
  const std::vector<IlluminantVec>& truths() const { return truths_; }
  const std::string& method_tag() const { return method_tag_; }
  const std::string& camera_tag() const { return camera_tag_; }

  /// 3xN matrices with estimates / truths as columns.
  Eigen::Matrix3Xd estimate_matrix() const;
  Eigen::Matrix3Xd truth_matrix() const;

 private:
  std::vector<IlluminantVec> estimates_;
  std::vector<IlluminantVec> truths_;
  std::string method_tag_;
  std::string camera_tag_;
};

struct AlsConfig {
  double threshold = 1e-8;  // on ||D(q) - D(q-1)||_F
  int max_iters = 100;
  /// Depth of the safeguarded Anderson extrapolation on D. 0 runs the plain
  /// alternation, which needs several hundred sweeps on typical corpora.
  int anderson_memory = 5;
};

struct ApapConfig {
  double sigma_w = 3.0;   // degrees
  double gamma = 0.0625;  // weight floor
};

struct AlsResult {
  ProjectiveTransform transform;
  int iterations = 0;
  bool converged = false;          // false: last iterate returned, treat as warning
  bool used_pseudo_inverse = false;
  int accelerated_steps = 0;       // sweeps where the extrapolated D was kept
  /// ||P A D - B||_F after initialization (P = I) and after every sweep.
  std::vector<double> objective;
};

struct CorrectedIlluminant {
  IlluminantVec value;
  bool clamped = false;  // a negative component was zeroed before normalizing
};

void validate(const AlsConfig& cfg);
void validate(const ApapConfig& cfg);

/// Alternating least squares for argmin_{P, D} ||P A D - B||_F over the
/// columns of `a` and `b`, D diagonal. Columns are used as given (no
/// renormalization), which is how per-sample weights enter.
AlsResult solve_als(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b, const AlsConfig& cfg);

AlsResult fit_global(const TrainingCorpus& corpus, const AlsConfig& cfg = {});

/// fit with every (estimate, truth) column pair scaled by weights[i].
AlsResult fit_weighted(const TrainingCorpus& corpus, const std::vector<double>& weights,
                       const AlsConfig& cfg = {});

/// w_i = max(exp(-angle(query, estimate_i) / sigma_w^2), gamma), angle in degrees.
std::vector<double> apap_weights(const IlluminantVec& query, const TrainingCorpus& corpus,
                                 const ApapConfig& cfg = {});

AlsResult fit_apap(const IlluminantVec& query, const TrainingCorpus& corpus,
                   const ApapConfig& apap = {}, const AlsConfig& als = {});

/// normalize(P * est) with negative components clamped to zero.
CorrectedIlluminant apply(const ProjectiveTransform& p, const IlluminantVec& est);

/// Finishes a correction from an already-transformed (unnormalized) ray:
/// clamps negatives and normalizes. `reference_norm` scales the collapse test.
CorrectedIlluminant finish_correction(const Eigen::Vector3d& corrected, double reference_norm);

/// Diagonal von Kries correction with gains (G/R, 1, G/B), clamped to [0, 1].
RawImage white_balance(const RawImage& img, const IlluminantVec& illum);

/// {"m": [9 row-major], "method": str, "camera": str}
struct TransformFile {
  ProjectiveTransform transform;
  std::string method;
  std::string camera;
};
std::string transform_to_json(const TransformFile& t);
TransformFile transform_from_json(std::string_view text);

/// Corpus artifact used by per-query APAP correction.
std::string corpus_to_json(const TrainingCorpus& corpus);
TrainingCorpus corpus_from_json(std::string_view text);

}  // namespace illum
