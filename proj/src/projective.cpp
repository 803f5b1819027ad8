#include "illum/projective.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <json.hpp>

namespace illum {

namespace {

constexpr double kPinvCondition = 1e12;
constexpr double kSingularCondition = 1e15;
constexpr double kParallelDeg = 1e-6;

}  // namespace

TrainingCorpus::TrainingCorpus(const std::vector<IlluminantVec>& estimates,
                               const std::vector<IlluminantVec>& truths, std::string method_tag,
                               std::string camera_tag)
    : method_tag_(std::move(method_tag)), camera_tag_(std::move(camera_tag)) {
  if (estimates.size() != truths.size()) {
    throw Error(ErrorCode::InvalidArgument, "estimate and truth counts differ");
  }
  if (estimates.size() < 3) {
    throw Error(ErrorCode::DegenerateCorpus, "a corpus needs at least 3 pairs");
  }
  estimates_.reserve(estimates.size());
  truths_.reserve(truths.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    estimates_.push_back(normalize(estimates[i]));
    truths_.push_back(normalize(truths[i]));
  }
}

Eigen::Matrix3Xd TrainingCorpus::estimate_matrix() const {
  Eigen::Matrix3Xd a(3, estimates_.size());
  for (std::size_t i = 0; i < estimates_.size(); ++i) a.col(i) = estimates_[i].vec();
  return a;
}

Eigen::Matrix3Xd TrainingCorpus::truth_matrix() const {
  Eigen::Matrix3Xd b(3, truths_.size());
  for (std::size_t i = 0; i < truths_.size(); ++i) b.col(i) = truths_[i].vec();
  return b;
}

void validate(const AlsConfig& cfg) {
  if (!(cfg.threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "ALS threshold must be positive");
  if (cfg.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "ALS max_iters must be >= 1");
}

void validate(const ApapConfig& cfg) {
  if (!(cfg.sigma_w > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_w must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
  }
}

namespace {

void require_three_directions(const Eigen::Matrix3Xd& a) {
  std::vector<Eigen::Vector3d> picked;
  for (Eigen::Index i = 0; i < a.cols() && picked.size() < 3; ++i) {
    const Eigen::Vector3d v = a.col(i);
    if (v.norm() == 0.0) continue;
    const bool fresh = std::all_of(picked.begin(), picked.end(), [&](const Eigen::Vector3d& u) {
      return angle_between_deg(u, v) > kParallelDeg && angle_between_deg(-u, v) > kParallelDeg;
    });
    if (fresh) picked.push_back(v);
  }
  if (picked.size() < 3) {
    throw Error(ErrorCode::DegenerateCorpus, "fewer than 3 non-parallel estimates");
  }
}

// argmin_P ||P X - Y||_F  =>  P G = Y X^T with G = X X^T.
Eigen::Matrix3d solve_p_step(const Eigen::Matrix3Xd& x, const Eigen::Matrix3Xd& y, bool& used_pinv) {
  const Eigen::Matrix3d gram = x * x.transpose();
  const Eigen::Matrix3d cross = y * x.transpose();
  if (!gram.allFinite()) throw Error(ErrorCode::SingularSystem, "non-finite Gram matrix");

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
  const double lmax = lambda[2];
  if (!(lmax > 0.0) || lambda[0] * kSingularCondition < lmax) {
    throw Error(ErrorCode::SingularSystem, "Gram matrix of the scaled estimates is singular");
  }
  if (lambda[0] * kPinvCondition >= lmax) {
    // Gram is symmetric positive definite: P^T = G^-1 (Y X^T)^T.
    return gram.llt().solve(cross.transpose()).transpose();
  }
  used_pinv = true;
  Eigen::Vector3d inv = Eigen::Vector3d::Zero();
  for (int i = 0; i < 3; ++i)
    if (lambda[i] * kPinvCondition >= lmax) inv[i] = 1.0 / lambda[i];
  const Eigen::Matrix3d pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return cross * pinv;
}

// argmin_D ||M D - B||_F column by column: d_i = (m_i . b_i) / |m_i|^2.
Eigen::VectorXd solve_d_step(const Eigen::Matrix3Xd& mapped, const Eigen::Matrix3Xd& b) {
  Eigen::VectorXd d(mapped.cols());
  for (Eigen::Index i = 0; i < mapped.cols(); ++i) {
    const double nn = mapped.col(i).squaredNorm();
    d[i] = nn > 0.0 ? mapped.col(i).dot(b.col(i)) / nn : 0.0;
  }
  return d;
}

double objective(const Eigen::Matrix3Xd& mapped, const Eigen::VectorXd& d, const Eigen::Matrix3Xd& b) {
  return (mapped * d.asDiagonal() - b).norm();
}

}  // namespace

AlsResult solve_als(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b, const AlsConfig& cfg) {
  validate(cfg);
  if (a.cols() != b.cols()) throw Error(ErrorCode::InvalidArgument, "A and B differ in width");
  if (!a.allFinite() || !b.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite corpus");
  require_three_directions(a);

  AlsResult res;
  // D(0) = argmin_D ||A D - B||_F
  Eigen::VectorXd d = solve_d_step(a, b);
  double f = objective(a, d, b);
  res.objective.push_back(f);

  struct Sweep {
    Eigen::Matrix3d p;
    Eigen::VectorXd d;
    double f;
    bool pinv = false;
  };
  auto sweep = [&](const Eigen::VectorXd& d_in) {
    Sweep s;
    s.p = solve_p_step(a * d_in.asDiagonal(), b, s.pinv);
    const Eigen::Matrix3Xd mapped = s.p * a;
    s.d = solve_d_step(mapped, b);
    s.f = objective(mapped, s.d, b);
    return s;
  };

  // Anderson history: past iterates and their sweep residuals T(d) - d.
  std::vector<Eigen::VectorXd> hist_d, hist_g;
  const auto memory = static_cast<std::size_t>(std::max(0, cfg.anderson_memory));

  Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
  for (int q = 1; q <= cfg.max_iters; ++q) {
    Sweep plain = sweep(d);
    Sweep next = plain;

    if (memory > 0) {
      const Eigen::VectorXd g = plain.d - d;
      hist_d.push_back(d);
      hist_g.push_back(g);
      if (hist_d.size() > memory + 1) {
        hist_d.erase(hist_d.begin());
        hist_g.erase(hist_g.begin());
      }
      if (hist_d.size() >= 2) {
        const Eigen::Index m = static_cast<Eigen::Index>(hist_d.size()) - 1;
        Eigen::MatrixXd dg(d.size(), m), dx(d.size(), m);
        for (Eigen::Index j = 0; j < m; ++j) {
          dg.col(j) = hist_g[j + 1] - hist_g[j];
          dx.col(j) = hist_d[j + 1] - hist_d[j];
        }
        const Eigen::VectorXd coef = dg.completeOrthogonalDecomposition().solve(g);
        const Eigen::VectorXd d_ext = d + g - (dx + dg) * coef;
        if (d_ext.allFinite()) {
          try {
            Sweep acc = sweep(d_ext);
            // Only an extrapolation that beats the plain sweep is kept, so
            // the objective stays non-increasing.
            if (acc.f <= plain.f) {
              next = std::move(acc);
              ++res.accelerated_steps;
            }
          } catch (const Error&) {
            // extrapolated D made the Gram matrix singular; keep the plain sweep
          }
        }
      }
    }

    const double change = (next.d - d).norm();
    res.used_pseudo_inverse = res.used_pseudo_inverse || next.pinv;
    p = next.p;
    d = std::move(next.d);
    f = next.f;
    res.objective.push_back(f);
    res.iterations = q;
    if (change <= cfg.threshold) {
      res.converged = true;
      break;
    }
  }
  if (!p.allFinite()) throw Error(ErrorCode::SingularSystem, "ALS produced a non-finite transform");

  // Fix the free scale: unit Frobenius norm, oriented so the training
  // estimates map into the positive half-space.
  const double fn = p.norm();
  if (!(fn > 0.0)) throw Error(ErrorCode::SingularSystem, "ALS collapsed to the zero transform");
  p /= fn;
  if ((p * a).sum() < 0.0) p = -p;
  res.transform.m = p;
  return res;
}

AlsResult fit_global(const TrainingCorpus& corpus, const AlsConfig& cfg) {
  return solve_als(corpus.estimate_matrix(), corpus.truth_matrix(), cfg);
}

AlsResult fit_weighted(const TrainingCorpus& corpus, const std::vector<double>& weights,
                       const AlsConfig& cfg) {
  if (weights.size() != corpus.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight count differs from corpus size");
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return solve_als(corpus.estimate_matrix() * w.asDiagonal(), corpus.truth_matrix() * w.asDiagonal(), cfg);
}

std::vector<double> apap_weights(const IlluminantVec& query, const TrainingCorpus& corpus,
                                 const ApapConfig& cfg) {
  validate(cfg);
  const double s2 = cfg.sigma_w * cfg.sigma_w;
  std::vector<double> w(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double theta = angle_between_deg(query.vec(), corpus.estimates()[i].vec());
    w[i] = std::max(std::exp(-theta / s2), cfg.gamma);
  }
  return w;
}

AlsResult fit_apap(const IlluminantVec& query, const TrainingCorpus& corpus, const ApapConfig& apap,
                   const AlsConfig& als) {
  return fit_weighted(corpus, apap_weights(query, corpus, apap), als);
}

CorrectedIlluminant finish_correction(const Eigen::Vector3d& corrected, double reference_norm) {
  if (!corrected.allFinite()) throw Error(ErrorCode::CollapsedOutput, "non-finite corrected ray");
  const double tol = 1e-12 * reference_norm;
  if (!(corrected.norm() >= tol) || corrected.norm() == 0.0) {
    throw Error(ErrorCode::CollapsedOutput, "transform maps the estimate to zero");
  }
  CorrectedIlluminant out;
  Eigen::Vector3d v = corrected;
  for (int c = 0; c < 3; ++c) {
    if (v[c] < 0.0) {
      v[c] = 0.0;
      out.clamped = true;
    }
  }
  if (!(v.norm() > tol) || v.norm() == 0.0) {
    throw Error(ErrorCode::CollapsedOutput, "corrected ray has no positive component");
  }
  out.value = IlluminantVec(v / v.norm());
  return out;
}

CorrectedIlluminant apply(const ProjectiveTransform& p, const IlluminantVec& est) {
  const double en = est.vec().norm();
  if (!(en > 0.0) || !est.is_finite()) throw Error(ErrorCode::ZeroVector, "cannot correct a zero estimate");
  return finish_correction(p.m * est.vec(), p.m.norm() * en);
}

RawImage white_balance(const RawImage& img, const IlluminantVec& illum) {
  if (!(illum.r() > 0.0 && illum.g() > 0.0 && illum.b() > 0.0)) {
    throw Error(ErrorCode::NonPositiveIlluminant, "white balance needs a strictly positive illuminant");
  }
  const Eigen::Vector3d gain(illum.g() / illum.r(), 1.0, illum.g() / illum.b());
  RawImage out = img;
  auto& px = out.data();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = std::clamp(px[i] * gain[i % 3], 0.0, 1.0);
  return out;
}

std::string transform_to_json(const TransformFile& t) {
  nlohmann::json j;
  std::vector<double> m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m.push_back(t.transform.m(r, c));
  j["m"] = m;
  j["method"] = t.method;
  j["camera"] = t.camera;
  return j.dump(2);
}

TransformFile transform_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto m = j.at("m").get<std::vector<double>>();
    if (m.size() != 9) throw Error(ErrorCode::ParseError, "transform needs 9 entries");
    TransformFile t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t.transform.m(r, c) = m[r * 3 + c];
    if (!t.transform.m.allFinite()) throw Error(ErrorCode::ParseError, "non-finite transform entry");
    t.method = j.value("method", "");
    t.camera = j.value("camera", "");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("transform JSON: ") + e.what());
  }
}

std::string corpus_to_json(const TrainingCorpus& corpus) {
  nlohmann::json j;
  j["method"] = corpus.method_tag();
  j["camera"] = corpus.camera_tag();
  auto rows = [](const std::vector<IlluminantVec>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : vs) arr.push_back({v.r(), v.g(), v.b()});
    return arr;
  };
  j["estimates"] = rows(corpus.estimates());
  j["truths"] = rows(corpus.truths());
  return j.dump(1);
}

TrainingCorpus corpus_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    auto vecs = [](const nlohmann::json& arr) {
      std::vector<IlluminantVec> out;
      for (const auto& row : arr) {
        const auto v = row.get<std::vector<double>>();
        if (v.size() != 3) throw Error(ErrorCode::ParseError, "illuminant needs 3 entries");
        out.emplace_back(v[0], v[1], v[2]);
      }
      return out;
    };
    return TrainingCorpus(vecs(j.at("estimates")), vecs(j.at("truths")), j.value("method", ""),
                          j.value("camera", ""));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("corpus JSON: ") + e.what());
  }
}

}  // namespace illum
