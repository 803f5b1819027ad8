#pragma once

#include <optional>
#include <string_view>

#include "illum/lut.hpp"
#include "illum/projective.hpp"

namespace illum {

enum class CorrectionMode { Global, Apap, ApapLut };

std::string_view to_string(CorrectionMode m);

struct CorrectionOptions {
  ApapConfig apap;
  AlsConfig als;
  int lut_size = 16;
  ChromaBounds lut_bounds;
  int threads = 0;
};

/// A trained correction of one kind, ready to answer queries. Global and
/// ApapLut precompute their transforms at construction; Apap keeps the corpus
/// and fits per query.
class BiasCorrector {
 public:
  BiasCorrector(TrainingCorpus corpus, CorrectionMode mode, const CorrectionOptions& opts = {});

  /// Wraps an already fitted global transform (no corpus needed).
  static BiasCorrector from_transform(const ProjectiveTransform& p);
  static BiasCorrector from_lut(LutGrid grid);

  CorrectionMode mode() const { return mode_; }
  CorrectedIlluminant correct(const IlluminantVec& query) const;

  const std::optional<ProjectiveTransform>& global_transform() const { return global_; }
  const std::optional<LutGrid>& lut() const { return lut_; }

 private:
  BiasCorrector() = default;

  CorrectionMode mode_ = CorrectionMode::Global;
  std::optional<TrainingCorpus> corpus_;
  CorrectionOptions opts_;
  std::optional<ProjectiveTransform> global_;
  std::optional<LutGrid> lut_;
};

/// One-shot dispatch: fits what `mode` needs from the corpus and corrects.
CorrectedIlluminant correct(const IlluminantVec& query, const TrainingCorpus& corpus, CorrectionMode mode,
                            const CorrectionOptions& opts = {});

}  // namespace illum
