#include "illum/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <json.hpp>

#include "illum/image_codec.hpp"
#include "parallel.hpp"

namespace illum {

namespace {

using nlohmann::json;

constexpr int kMaxLevel = 4095;  // 15 * 4095 fits in 16 bits
constexpr int kMaxReflectance = 15;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

std::array<double, 9> to_array(const ProjectiveTransform& p) {
  std::array<double, 9> a{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a[r * 3 + c] = p.m(r, c);
  return a;
}

ProjectiveTransform from_array(const std::vector<double>& a) {
  if (a.size() != 9) throw Error(ErrorCode::ParseError, "a plant needs 9 row-major entries");
  ProjectiveTransform p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p.m(r, c) = a[r * 3 + c];
  return p;
}

IlluminantVec vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorCode::ParseError, "expected an RGB triple");
  return IlluminantVec(v[0], v[1], v[2]);
}

void check_plant(const ProjectiveTransform& p) {
  if (!p.m.allFinite()) throw Error(ErrorCode::SingularPlant, "plant has non-finite entries");
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(p.m);
  const auto s = svd.singularValues();
  if (!(s(2) > 1e-12 * s(0))) throw Error(ErrorCode::SingularPlant, "plant is not invertible");
}

// Integer camera response proportional to a positive direction.
Eigen::Vector3i quantize(const Eigen::Vector3d& dir) {
  const double peak = dir.maxCoeff();
  Eigen::Vector3i k;
  for (int c = 0; c < 3; ++c) {
    k[c] = std::max(1, static_cast<int>(std::lround(dir[c] / peak * kMaxLevel)));
  }
  return k;
}

struct Scene {
  IlluminantVec truth;
  IlluminantVec estimate;
  int cluster = 0;
  Raw16Image image;
};

Scene make_scene(const SynthSpec& spec, int i) {
  auto rng = keyed_engine(spec.seed, static_cast<std::uint64_t>(i));
  Scene s;
  s.cluster = spec.sampler == SamplerKind::TwoCluster ? i % 2 : 0;
  const ProjectiveTransform* plant = nullptr;
  if (spec.plants.size() == 1) plant = &spec.plants[0];
  if (spec.plants.size() == 2) plant = &spec.plants[s.cluster];

  // Truths whose planted estimate would leave the positive octant are redrawn.
  Eigen::Vector3d dir;
  for (int draw = 0;; ++draw) {
    if (draw == 1000) {
      throw Error(ErrorCode::InvalidArgument,
                  "scene " + std::to_string(i) + ": planted estimates keep leaving the positive octant");
    }
    const IlluminantVec truth = spec.sampler == SamplerKind::TwoCluster
                                    ? sample_cone(rng, s.cluster == 0 ? spec.c1 : spec.c2, spec.spread_deg)
                                    : sample_simplex(rng);
    dir = plant ? Eigen::Vector3d(plant->m.inverse() * truth.vec()) : truth.vec();
    if (dir.maxCoeff() <= 0.0) dir = -dir;
    if (dir.minCoeff() > 0.0) break;
  }
  const Eigen::Vector3i k = quantize(dir);
  const Eigen::Vector3d kd = k.cast<double>();
  s.estimate = normalize(IlluminantVec(kd));
  s.truth = normalize(IlluminantVec(plant ? Eigen::Vector3d(plant->m * kd) : kd));

  const int n = spec.width * spec.height;
  std::vector<std::array<int, 3>> refl(static_cast<std::size_t>(n));
  if (spec.reflectance == ReflectanceModel::AchromaticMean) {
    for (int g = 0; g < n / 3; ++g) {
      const int a = uniform_int(rng, 1, kMaxReflectance);
      const int b = uniform_int(rng, 1, kMaxReflectance);
      const int c = uniform_int(rng, 1, kMaxReflectance);
      refl[3 * g] = {a, b, c};
      refl[3 * g + 1] = {b, c, a};
      refl[3 * g + 2] = {c, a, b};
    }
    for (int j = n - 1; j > 0; --j) std::swap(refl[j], refl[uniform_int(rng, 0, j)]);
  } else {
    for (auto& px : refl) {
      for (int& v : px) v = uniform_int(rng, 1, kMaxReflectance);
    }
  }
  s.image.width = spec.width;
  s.image.height = spec.height;
  s.image.data.resize(static_cast<std::size_t>(n) * 3);
  for (int p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) s.image.data[static_cast<std::size_t>(p) * 3 + c] = static_cast<std::uint16_t>(refl[p][c] * k[c]);
  }
  return s;
}

std::string image_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "images/img_%04d.png", i);
  return buf;
}

double objective(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b, const Eigen::Matrix3d& p,
                 const Eigen::VectorXd& d) {
  return ((p * a) * d.asDiagonal() - b).squaredNorm();
}

}  // namespace

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ull + 1)));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

IlluminantVec sample_simplex(std::mt19937_64& rng, double margin) {
  Eigen::Vector3d x;
  for (int c = 0; c < 3; ++c) x[c] = -std::log1p(-uniform01(rng));
  x /= x.sum();
  return IlluminantVec(Eigen::Vector3d(Eigen::Vector3d::Constant(margin) + (1.0 - 3.0 * margin) * x));
}

IlluminantVec sample_cone(std::mt19937_64& rng, const IlluminantVec& center, double spread_deg) {
  const Eigen::Vector3d c = normalize(center).vec();
  const Eigen::Vector3d helper = std::abs(c.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d u = c.cross(helper).normalized();
  const Eigen::Vector3d v = c.cross(u);
  const double cos_max = std::cos(spread_deg * std::numbers::pi / 180.0);
  const double cos_t = 1.0 - uniform01(rng) * (1.0 - cos_max);
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double phi = 2.0 * std::numbers::pi * uniform01(rng);
  return IlluminantVec(Eigen::Vector3d(cos_t * c + sin_t * (std::cos(phi) * u + std::sin(phi) * v)));
}

SynthSpec synth_spec_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SynthSpec s;
    s.seed = j.value("seed", s.seed);
    s.n_images = j.value("n_images", s.n_images);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.camera = j.value("camera", s.camera);
    if (j.contains("sampler")) {
      const auto& js = j.at("sampler");
      const std::string kind = js.value("kind", std::string("uniform_simplex"));
      if (kind == "uniform_simplex") {
        s.sampler = SamplerKind::UniformSimplex;
      } else if (kind == "two_cluster") {
        s.sampler = SamplerKind::TwoCluster;
        if (js.contains("c1")) s.c1 = vec_from_json(js.at("c1"));
        if (js.contains("c2")) s.c2 = vec_from_json(js.at("c2"));
        s.spread_deg = js.value("spread_deg", s.spread_deg);
      } else {
        throw Error(ErrorCode::ParseError, "unknown sampler '" + kind + "'");
      }
    }
    if (j.contains("plants")) {
      for (const auto& p : j.at("plants")) s.plants.push_back(from_array(p.get<std::vector<double>>()));
    }
    const std::string refl = j.value("reflectance", std::string("achromatic_mean"));
    if (refl == "achromatic_mean") {
      s.reflectance = ReflectanceModel::AchromaticMean;
    } else if (refl == "random") {
      s.reflectance = ReflectanceModel::Random;
    } else {
      throw Error(ErrorCode::ParseError, "unknown reflectance model '" + refl + "'");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("synth spec: ") + e.what());
  }
}

std::string synth_spec_to_json(const SynthSpec& s) {
  json j = {{"seed", s.seed}, {"n_images", s.n_images}, {"width", s.width}, {"height", s.height}, {"camera", s.camera}};
  if (s.sampler == SamplerKind::TwoCluster) {
    j["sampler"] = {{"kind", "two_cluster"},
                    {"c1", {s.c1.r(), s.c1.g(), s.c1.b()}},
                    {"c2", {s.c2.r(), s.c2.g(), s.c2.b()}},
                    {"spread_deg", s.spread_deg}};
  } else {
    j["sampler"] = {{"kind", "uniform_simplex"}};
  }
  json plants = json::array();
  for (const auto& p : s.plants) plants.push_back(to_array(p));
  j["plants"] = plants;
  j["reflectance"] = s.reflectance == ReflectanceModel::AchromaticMean ? "achromatic_mean" : "random";
  return j.dump(2);
}

SynthSpec two_cluster_spec(std::uint64_t seed, int n_images, double stretch) {
  SynthSpec s;
  s.seed = seed;
  s.n_images = n_images;
  s.camera = "two-cluster";
  s.sampler = SamplerKind::TwoCluster;
  s.c1 = IlluminantVec(1.0, 1.0, 1.0);
  s.c2 = IlluminantVec(3.0, 1.0, 1.0);
  s.spread_deg = 5.0;
  ProjectiveTransform p1;
  p1.m << 1.00, 0.20, 0.00,
          0.00, 1.00, 0.10,
          0.10, 0.00, 0.80;
  // The second plant agrees with the first on the plane through both
  // clusters' estimate centers and stretches the normal of that plane, so the
  // two plants map both centers identically but differ in local shape.
  const Eigen::Matrix3d inv = p1.m.inverse();
  const Eigen::Vector3d normal = (inv * s.c1.vec()).cross(inv * s.c2.vec()).normalized();
  ProjectiveTransform p2;
  p2.m = p1.m * (Eigen::Matrix3d::Identity() + stretch * normal * normal.transpose());
  s.plants = {p1, p2};
  return s;
}

SynthDataset generate(const SynthSpec& spec) {
  if (spec.n_images < 3) throw Error(ErrorCode::InvalidArgument, "a synthetic corpus needs at least 3 images");
  if (spec.width < 1 || spec.height < 1) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (spec.reflectance == ReflectanceModel::AchromaticMean && (spec.width * spec.height) % 3 != 0) {
    throw Error(ErrorCode::InvalidArgument, "achromatic-mean scenes need a pixel count divisible by 3");
  }
  if (spec.plants.size() > 2 || (spec.plants.size() == 2 && spec.sampler != SamplerKind::TwoCluster)) {
    throw Error(ErrorCode::InvalidArgument, "per-cluster plants need the two-cluster sampler");
  }
  if (spec.sampler == SamplerKind::TwoCluster && !(spec.spread_deg >= 0.0 && spec.spread_deg < 90.0)) {
    throw Error(ErrorCode::InvalidArgument, "cluster spread must lie in [0, 90) degrees");
  }
  for (const auto& p : spec.plants) check_plant(p);

  std::vector<Scene> scenes(static_cast<std::size_t>(spec.n_images));
  detail::parallel_for(scenes.size(), 0, [&](std::size_t i) { scenes[i] = make_scene(spec, static_cast<int>(i)); });

  SynthDataset out;
  out.manifest.name = spec.camera;
  out.answers.plants = spec.plants;
  for (int i = 0; i < spec.n_images; ++i) {
    auto& s = scenes[i];
    SampleRecord rec;
    rec.image_path = image_name(i);
    rec.gt_illuminant = s.truth;
    rec.camera_id = spec.camera;
    rec.fold = i % 3 + 1;
    out.manifest.records.push_back(std::move(rec));
    out.answers.truths.push_back(s.truth);
    out.answers.estimates.push_back(s.estimate);
    out.answers.clusters.push_back(s.cluster);
    out.images.push_back(std::move(s.image));
  }
  out.corpus = TrainingCorpus(out.answers.estimates, out.answers.truths, "gw", spec.camera);
  return out;
}

void export_dataset(const SynthDataset& data, const SynthSpec& spec, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + (dir / "images").string() + ": " + ec.message());
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    write_png16(dir / data.manifest.records[i].image_path, data.images[i]);
  }
  write_manifest(data.manifest, dir / "manifest.csv");

  json scenes = json::array();
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const auto& t = data.answers.truths[i];
    const auto& e = data.answers.estimates[i];
    scenes.push_back({{"image", data.manifest.records[i].image_path},
                      {"cluster", data.answers.clusters[i]},
                      {"truth", {t.r(), t.g(), t.b()}},
                      {"gray_world", {e.r(), e.g(), e.b()}}});
  }
  const json truth = {{"spec", json::parse(synth_spec_to_json(spec))}, {"scenes", scenes}};
  std::ofstream out(dir / "truth.json", std::ios::binary);
  out << truth.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "truth.json").string());
}

ProjectiveTransform random_plant(std::uint64_t seed, double strength, double max_condition) {
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    auto rng = keyed_engine(seed, attempt);
    ProjectiveTransform p;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) p.m(r, c) = (r == c ? 1.0 : 0.0) + strength * uniform01(rng);
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(p.m);
    if (svd.singularValues()(0) < max_condition * svd.singularValues()(2)) return p;
  }
  throw Error(ErrorCode::SingularPlant, "no plant within the condition bound");
}

TrainingCorpus planted_corpus(std::uint64_t seed, int n, const ProjectiveTransform& plant, double noise_deg) {
  check_plant(plant);
  std::vector<IlluminantVec> est, truth;
  for (int i = 0; i < n; ++i) {
    auto rng = keyed_engine(seed, static_cast<std::uint64_t>(i));
    const Eigen::Vector3d e = sample_simplex(rng).vec() * (0.5 + 1.5 * uniform01(rng));
    Eigen::Vector3d t = (0.5 + 1.5 * uniform01(rng)) * (plant.m * e);
    if (noise_deg > 0.0) t = sample_cone(rng, IlluminantVec(t), noise_deg).vec();
    est.emplace_back(e);
    truth.emplace_back(t);
  }
  return TrainingCorpus(est, truth, "planted");
}

ProjectiveTransform brute_force_fit(const TrainingCorpus& corpus, const std::vector<double>& weights) {
  const int n = static_cast<int>(corpus.size());
  if (n < 3 || weights.size() != corpus.size()) {
    throw Error(ErrorCode::InvalidArgument, "brute-force fit needs >= 3 pairs and one weight per pair");
  }
  Eigen::Matrix3Xd a = corpus.estimate_matrix();
  Eigen::Matrix3Xd b = corpus.truth_matrix();
  for (int i = 0; i < n; ++i) {
    a.col(i) *= weights[i];
    b.col(i) *= weights[i];
  }

  Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = a.col(i).dot(b.col(i)) / a.col(i).squaredNorm();

  const int unknowns = 9 + n;
  Eigen::MatrixXd jac(3 * n, unknowns);
  Eigen::VectorXd res(3 * n);
  double f = objective(a, b, p, d);
  for (int iter = 0; iter < 500; ++iter) {
    jac.setZero();
    const Eigen::Matrix3Xd pa = p * a;
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < 3; ++r) {
        const int row = 3 * i + r;
        res[row] = d[i] * pa(r, i) - b(r, i);
        for (int k = 0; k < 3; ++k) jac(row, 3 * r + k) = d[i] * a(k, i);
        jac(row, 9 + i) = pa(r, i);
      }
    }
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cutoff = 1e-12 * s[0];
    int rank = 0;
    Eigen::VectorXd ut_r = svd.matrixU().transpose() * res;
    for (int k = 0; k < s.size(); ++k) {
      if (s[k] > cutoff) {
        ut_r[k] /= s[k];
        ++rank;
      } else {
        ut_r[k] = 0.0;
      }
    }
    // One direction is always free: (cP, d / c) leaves every residual unchanged.
    if (rank < unknowns - 1) throw Error(ErrorCode::SingularSystem, "rank-deficient weighted system");
    const Eigen::VectorXd step = -(svd.matrixV() * ut_r);

    double t = 1.0;
    bool improved = false;
    Eigen::Matrix3d p_new;
    Eigen::VectorXd d_new;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      p_new = p;
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) p_new(r, k) += t * step[3 * r + k];
      d_new = d + t * step.tail(n);
      f_new = objective(a, b, p_new, d_new);
      if (f_new <= f) {
        improved = true;
        break;
      }
    }
    if (!improved) break;
    const double moved = t * step.norm();
    const double scale = 1.0 + std::sqrt(p.squaredNorm() + d.squaredNorm());
    p = p_new;
    d = d_new;
    const double prev = f;
    f = f_new;
    if (moved <= 1e-15 * scale || prev - f <= 1e-30) break;
  }

  p /= p.norm();
  if ((p * a).sum() < 0.0) p = -p;
  return ProjectiveTransform{p};
}

ProjectiveTransform brute_force_weighted_fit(const IlluminantVec& query, const TrainingCorpus& corpus,
                                             const ApapConfig& apap) {
  validate(apap);
  std::vector<double> w(corpus.size());
  const IlluminantVec q = normalize(query);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double theta = angle_between_deg(q.vec(), corpus.estimates()[i].vec());
    w[i] = std::max(std::exp(-theta / (apap.sigma_w * apap.sigma_w)), apap.gamma);
  }
  return brute_force_fit(corpus, w);
}

}  // namespace illum
