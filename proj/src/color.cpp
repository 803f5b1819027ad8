#include "illum/color.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

namespace illum {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DegenerateSum: return "DegenerateSum";
    case ErrorCode::CollapsedOutput: return "CollapsedOutput";
    case ErrorCode::DegenerateCorpus: return "DegenerateCorpus";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::SelectionEmpty: return "SelectionEmpty";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::NonPositiveIlluminant: return "NonPositiveIlluminant";
    case ErrorCode::SingularPlant: return "SingularPlant";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BadLevels: return "BadLevels";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::InvalidLevels: return "InvalidLevels";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::MissingFoldLabel: return "MissingFoldLabel";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::TruncatedStream: return "TruncatedStream";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {
constexpr double kZeroNorm = 1e-15;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}  // namespace

IlluminantVec normalize(const IlluminantVec& v) {
  if (!v.is_finite()) throw Error(ErrorCode::ZeroVector, "non-finite illuminant");
  const double n = v.vec().norm();
  if (n < kZeroNorm) throw Error(ErrorCode::ZeroVector, "illuminant has zero norm");
  return IlluminantVec(v.vec() / n);
}

double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na >= kZeroNorm) || !(nb >= kZeroNorm) || !std::isfinite(na) || !std::isfinite(nb)) {
    throw Error(ErrorCode::ZeroVector, "angular error of a zero vector");
  }
  // atan2 of (|a x b|, a.b) equals acos of the clamped cosine but keeps full
  // precision near 0 deg; acos(1 - ulp) alone is already ~1e-6 deg.
  const Eigen::Vector3d an = a / na;
  const Eigen::Vector3d bn = b / nb;
  const double s = an.cross(bn).norm();
  const double c = std::clamp(an.dot(bn), -1.0, 1.0);
  return std::atan2(s, c) * kRadToDeg;
}

AngleDeg angular_error(const IlluminantVec& a, const IlluminantVec& b) {
  return {angle_between_deg(a.vec(), b.vec())};
}

Chromaticity2D to_chromaticity(const IlluminantVec& v) {
  const double s = v.r() + v.g() + v.b();
  if (!(s > kZeroNorm)) throw Error(ErrorCode::DegenerateSum, "R+G+B must be positive");
  return {v.r() / s, v.g() / s};
}

IlluminantVec from_chromaticity(const Chromaticity2D& c) {
  return IlluminantVec(c.u1, c.u2, 1.0 - c.u1 - c.u2);
}

}  // namespace illum
