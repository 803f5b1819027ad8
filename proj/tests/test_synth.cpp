#include <random>
#include <vector>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "illum/dataset.hpp"
#include "illum/estimators.hpp"
#include "illum/image_codec.hpp"
#include "illum/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace illum;

namespace {

RawImage decoded(const SynthDataset& d, std::size_t i) {
  return prepare_sample(d.images[i], d.manifest.records[i], {d.images[i].width, d.images[i].height});
}

Eigen::Vector3d positive_vec(std::mt19937_64& rng) {
  return {oracle::uniform(rng, 0.1, 1), oracle::uniform(rng, 0.1, 1), oracle::uniform(rng, 0.1, 1)};
}

// Mean and max action error of a correction over the queries of one cluster.
struct ClusterErr {
  double mean = 0, max = 0;
};

template <typename Fn>
std::array<ClusterErr, 2> cluster_errors(const SynthDataset& queries, Fn correct) {
  std::array<ClusterErr, 2> out{};
  std::array<int, 2> n{};
  for (std::size_t i = 0; i < queries.answers.truths.size(); ++i) {
    const int c = queries.answers.clusters[i];
    const double e = angular_error(correct(queries.answers.estimates[i]), queries.answers.truths[i]).value;
    out[c].mean += e;
    out[c].max = std::max(out[c].max, e);
    ++n[c];
  }
  for (int c = 0; c < 2; ++c) out[c].mean /= n[c];
  return out;
}

}  // namespace

TEST(Sampling, SimplexMarginAndCone) {
  std::mt19937_64 rng = keyed_engine(5, 0);
  for (int i = 0; i < 2000; ++i) {
    const auto v = sample_simplex(rng);
    EXPECT_NEAR(v.r() + v.g() + v.b(), 1.0, 1e-12);
    EXPECT_GE(v.r(), 0.05 - 1e-12);
    EXPECT_GE(v.g(), 0.05 - 1e-12);
    EXPECT_GE(v.b(), 0.05 - 1e-12);
    const IlluminantVec center(3, 1, 1);
    EXPECT_LE(angular_error(sample_cone(rng, center, 5.0), center).value, 5.0 + 1e-9);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Sampling, KeyedEnginesIndependentOfOrder) {
  auto a = keyed_engine(11, 3);
  auto b = keyed_engine(11, 3);
  auto c = keyed_engine(11, 4);
  auto d = keyed_engine(12, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Generate, Deterministic) {
  SynthSpec spec;
  spec.seed = 77;
  spec.n_images = 12;
  spec.plants = {random_plant(3)};
  const auto a = generate(spec);
  const auto b = generate(spec);
  ASSERT_EQ(a.images.size(), 12u);
  for (std::size_t i = 0; i < a.images.size(); ++i) EXPECT_EQ(a.images[i].data, b.images[i].data);
  EXPECT_EQ(a.answers.truths, b.answers.truths);
  EXPECT_EQ(a.answers.estimates, b.answers.estimates);
  spec.seed = 78;
  EXPECT_NE(generate(spec).images[0].data, a.images[0].data);
}

TEST(Generate, AchromaticMeanGivesExactGrayWorld) {
  SynthSpec spec;
  spec.seed = 5;
  spec.n_images = 30;
  const auto d = generate(spec);
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    const auto gw = gray_world(decoded(d, i));
    EXPECT_LT(angular_error(gw, d.answers.estimates[i]).value, 1e-6);
    // Without a plant the estimate is the truth.
    EXPECT_LT(angular_error(gw, d.answers.truths[i]).value, 1e-6);
    EXPECT_LT(angular_error(d.manifest.records[i].gt_illuminant, d.answers.truths[i]).value, 1e-12);
  }
}

TEST(Generate, PlantRelatesEstimatesToTruths) {
  SynthSpec spec;
  spec.seed = 6;
  spec.n_images = 30;
  spec.plants = {random_plant(8)};
  const auto d = generate(spec);
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    EXPECT_LT(angular_error(gray_world(decoded(d, i)), d.answers.estimates[i]).value, 1e-6);
    EXPECT_LT(oracle::angle_deg(spec.plants[0].m * d.answers.estimates[i].vec(), d.answers.truths[i].vec()), 1e-9);
  }
  EXPECT_EQ(d.corpus.size(), 30u);
  EXPECT_EQ(d.corpus.method_tag(), "gw");
}

TEST(Generate, Errors) {
  SynthSpec spec;
  spec.plants = {ProjectiveTransform{Eigen::Matrix3d::Zero()}};
  expect_code(ErrorCode::SingularPlant, [&] { generate(spec); });
  Eigen::Matrix3d rank2;
  rank2 << 1, 0, 0, 0, 1, 0, 1, 1, 0;
  spec.plants = {ProjectiveTransform{rank2}};
  expect_code(ErrorCode::SingularPlant, [&] { generate(spec); });
  spec = {};
  spec.width = 7;
  spec.height = 7;
  expect_code(ErrorCode::InvalidArgument, [&] { generate(spec); });
  spec = {};
  spec.plants = {random_plant(1), random_plant(2)};
  expect_code(ErrorCode::InvalidArgument, [&] { generate(spec); });
}

TEST(Generate, SpecJsonRoundTrip) {
  const SynthSpec spec = two_cluster_spec(9, 24);
  const SynthSpec back = synth_spec_from_json(synth_spec_to_json(spec));
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.n_images, 24);
  EXPECT_EQ(back.sampler, SamplerKind::TwoCluster);
  EXPECT_EQ(back.spread_deg, spec.spread_deg);
  ASSERT_EQ(back.plants.size(), 2u);
  EXPECT_EQ(back.plants[1], spec.plants[1]);
  EXPECT_EQ(generate(back).answers.truths, generate(spec).answers.truths);
  expect_code(ErrorCode::ParseError, [] { synth_spec_from_json("{\"sampler\": {\"kind\": \"spiral\"}}"); });
  expect_code(ErrorCode::ParseError, [] { synth_spec_from_json("{\"plants\": [[1, 2]]}"); });
}

TEST(Generate, ExportLoadsAsManifest) {
  oracle::TempDir dir("synth_export");
  SynthSpec spec;
  spec.seed = 4;
  spec.n_images = 9;
  const auto d = generate(spec);
  export_dataset(d, spec, dir.path());
  const auto m = load_manifest(dir.path() / "manifest.csv");
  ASSERT_EQ(m.records.size(), 9u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "truth.json"));
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(read_image16(m.records[i].image_path).data, d.images[i].data);
    EXPECT_LT(angular_error(m.records[i].gt_illuminant, d.answers.truths[i]).value, 1e-9);
    EXPECT_EQ(m.records[i].fold, static_cast<int>(i % 3) + 1);
  }
}

TEST(Plants, RandomPlantConditioned) {
  for (std::uint64_t seed = 1; seed < 50; ++seed) {
    const auto p = random_plant(seed);
    const Eigen::Vector3d s = p.m.jacobiSvd().singularValues();
    EXPECT_LE(s[0] / s[2], 10.0);
    EXPECT_TRUE((p.m.array() > 0).all());
  }
  EXPECT_EQ(random_plant(4), random_plant(4));
}

TEST(TwoCluster, ClustersFarApartAndPlantsDistinct) {
  const SynthSpec spec = two_cluster_spec(1);
  EXPECT_GE(angular_error(spec.c1, spec.c2).value, 20.0);
  ASSERT_EQ(spec.plants.size(), 2u);
  // Equal action at both centers, different elsewhere.
  const Eigen::Matrix3d inv1 = spec.plants[0].m.inverse();
  for (const auto& c : {spec.c1, spec.c2}) {
    const Eigen::Vector3d e = inv1 * c.vec();
    EXPECT_LT(oracle::angle_deg(spec.plants[0].m * e, spec.plants[1].m * e), 1e-9);
  }
  const Eigen::Vector3d off(1, 2, 3);
  EXPECT_GT(oracle::angle_deg(spec.plants[0].m * off, spec.plants[1].m * off), 1.0);
}

TEST(TwoCluster, GlobalFailsApapSucceeds) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto train = generate(two_cluster_spec(seed));
    const auto queries = generate(two_cluster_spec(seed + 100, 200));
    const auto global = fit_global(train.corpus).transform;
    const auto g = cluster_errors(queries, [&](const IlluminantVec& q) { return apply(global, q).value; });
    const auto a = cluster_errors(queries, [&](const IlluminantVec& q) {
      return apply(fit_apap(q, train.corpus).transform, q).value;
    });
    EXPECT_GT(std::max(g[0].mean, g[1].mean), 1.0) << seed;
    EXPECT_LT(a[0].max, 0.5) << seed;
    EXPECT_LT(a[1].max, 0.5) << seed;
  }
}

TEST(BruteForce, GammaOneMatchesGlobal) {
  const auto d = generate(two_cluster_spec(21, 30));
  const auto global = fit_global(d.corpus).transform;
  ApapConfig one;
  one.gamma = 1.0;
  std::mt19937_64 rng(101);
  const auto bf = brute_force_weighted_fit(IlluminantVec(1, 1, 1), d.corpus, one);
  for (int i = 0; i < 50; ++i) {
    const IlluminantVec q(positive_vec(rng));
    EXPECT_LT(angular_error(apply(bf, q).value, apply(global, q).value).value, 1e-4);
  }
}

TEST(BruteForce, PlantedSingleTransform) {
  const auto plant = random_plant(31);
  const TrainingCorpus corpus = planted_corpus(32, 30, plant);
  std::mt19937_64 rng(102);
  for (int i = 0; i < 10; ++i) {
    const IlluminantVec q(positive_vec(rng));
    const auto bf = brute_force_weighted_fit(q, corpus);
    const auto als = fit_apap(q, corpus).transform;
    EXPECT_LT(oracle::angle_deg(bf.m * q.vec(), plant.m * q.vec()), 1e-6);
    EXPECT_LT(oracle::angle_deg(als.m * q.vec(), plant.m * q.vec()), 1e-6);
  }
}

TEST(BruteForce, RandomNoisyCorpusAgreesWithAls) {
  std::mt19937_64 rng(103);
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TrainingCorpus corpus = planted_corpus(200 + seed, 30, random_plant(300 + seed, 0.5), 5.0);
    for (int i = 0; i < 20; ++i) {
      const IlluminantVec q(positive_vec(rng));
      const auto bf = brute_force_weighted_fit(q, corpus);
      const auto als = fit_apap(q, corpus).transform;
      worst = std::max(worst, angular_error(apply(bf, q).value, apply(als, q).value).value);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(BruteForce, AlsNeverWorseOnUnrelatedPairs) {
  // With unrelated pairs the weighted objective can have no minimizer (it
  // keeps falling as P turns singular), so only the objective is compared.
  std::mt19937_64 rng(104);
  auto weighted_objective = [](const ProjectiveTransform& p, const TrainingCorpus& c, const std::vector<double>& w) {
    double f = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const Eigen::Vector3d m = w[i] * (p.m * c.estimates()[i].vec());
      const Eigen::Vector3d b = w[i] * c.truths()[i].vec();
      f += (m.dot(b) / m.squaredNorm() * m - b).squaredNorm();
    }
    return std::sqrt(f);
  };
  std::vector<IlluminantVec> est, tru;
  for (int i = 0; i < 30; ++i) {
    est.emplace_back(positive_vec(rng));
    tru.emplace_back(positive_vec(rng));
  }
  const TrainingCorpus corpus(est, tru);
  for (int i = 0; i < 8; ++i) {
    const IlluminantVec q(positive_vec(rng));
    const auto w = apap_weights(q, corpus);
    const double f_bf = weighted_objective(brute_force_fit(corpus, w), corpus, w);
    const double f_als = weighted_objective(fit_weighted(corpus, w).transform, corpus, w);
    EXPECT_LE(f_als, f_bf * (1 + 1e-9));
  }
}

TEST(BruteForce, PlantedCorpusWithNoise) {
  const auto plant = random_plant(41);
  const TrainingCorpus corpus = planted_corpus(42, 40, plant, 2.0);
  std::mt19937_64 rng(104);
  for (int i = 0; i < 30; ++i) {
    const IlluminantVec q(positive_vec(rng));
    const auto bf = brute_force_weighted_fit(q, corpus);
    const auto als = fit_apap(q, corpus).transform;
    EXPECT_LT(angular_error(apply(bf, q).value, apply(als, q).value).value, 1e-4);
  }
  expect_code(ErrorCode::InvalidArgument, [&] { brute_force_fit(corpus, {1.0, 2.0}); });
}
