#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "illum/dataset.hpp"
#include "illum/projective.hpp"

namespace illum {

/// Engine for item `index` of a stream keyed by `seed`: the seed material is
/// a splitmix64 hash of the pair, so items can be drawn in any order.
std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

/// Uniform over the RGB simplex shrunk so every chromaticity coordinate is at
/// least `margin`; returned with unit sum.
IlluminantVec sample_simplex(std::mt19937_64& rng, double margin = 0.05);

/// Uniform over the spherical cap of half-angle spread_deg around `center`.
IlluminantVec sample_cone(std::mt19937_64& rng, const IlluminantVec& center, double spread_deg);

enum class SamplerKind { UniformSimplex, TwoCluster };
enum class ReflectanceModel { AchromaticMean, Random };

struct SynthSpec {
  std::uint64_t seed = 1;
  int n_images = 60;
  int width = 48;
  int height = 32;
  std::string camera = "synth";
  SamplerKind sampler = SamplerKind::UniformSimplex;
  IlluminantVec c1{1.0, 1.0, 1.0};
  IlluminantVec c2{3.0, 1.0, 1.0};
  double spread_deg = 8.0;
  /// Empty: estimates equal truths. One entry: a single camera-wide plant.
  /// Two entries: per cluster (TwoCluster only).
  std::vector<ProjectiveTransform> plants;
  ReflectanceModel reflectance = ReflectanceModel::AchromaticMean;
};

SynthSpec synth_spec_from_json(std::string_view text);
std::string synth_spec_to_json(const SynthSpec& spec);

/// The two-cluster corpus used by the mixed-bias checks: truths around
/// (1,1,1) and (3,1,1), about 29.5 degrees apart. The plants agree at both
/// cluster centers and differ by `stretch` along the normal of the plane
/// through them, which no single transform can serve on both clusters.
SynthSpec two_cluster_spec(std::uint64_t seed, int n_images = 60, double stretch = 2.0);

struct SynthAnswers {
  std::vector<IlluminantVec> truths;     // unit norm
  std::vector<IlluminantVec> estimates;  // exact gray-world output of each image, unit norm
  std::vector<int> clusters;             // 0 or 1
  std::vector<ProjectiveTransform> plants;
};

struct SynthDataset {
  DatasetManifest manifest;  // image paths are "images/img_NNNN.png"
  std::vector<Raw16Image> images;
  TrainingCorpus corpus;
  SynthAnswers answers;
};

/// Scene i is drawn from keyed_engine(seed, i). With a plant P for the
/// scene's cluster the image is rendered under the biased illuminant k, an
/// integer triple proportional to P^-1 * truth, and the recorded truth is
/// redefined as normalize(P * k). The reflectance field is built from cyclic
/// channel permutations, so every channel of an AchromaticMean image has the
/// same reflectance sum and gray world returns k exactly.
SynthDataset generate(const SynthSpec& spec);

/// Writes manifest.csv, images/ and truth.json under `dir`.
void export_dataset(const SynthDataset& data, const SynthSpec& spec, const std::filesystem::path& dir);

/// A random 3x3 transform with positive entries near the identity whose
/// condition number stays below max_condition.
ProjectiveTransform random_plant(std::uint64_t seed, double strength = 0.3, double max_condition = 10.0);

/// N pairs with estimates drawn on the simplex and truths = s_i * P * e_i
/// (random per-pair scales s_i), optionally rotated by up to noise_deg.
TrainingCorpus planted_corpus(std::uint64_t seed, int n, const ProjectiveTransform& plant, double noise_deg = 0.0);

/// Independent solver for the weighted objective ||P A W D - B W||_F: damped
/// Gauss-Newton over (P, d) jointly, each step from a dense SVD
/// pseudo-inverse of the full Jacobian. D is set to its closed form at the
/// end. Meant for small corpora (N <= 200).
ProjectiveTransform brute_force_weighted_fit(const IlluminantVec& query, const TrainingCorpus& corpus,
                                             const ApapConfig& apap = {});

/// Same solver with explicit per-pair weights.
ProjectiveTransform brute_force_fit(const TrainingCorpus& corpus, const std::vector<double>& weights);

}  // namespace illum
