#include "illum/correction.hpp"

namespace illum {

std::string_view to_string(CorrectionMode m) {
  switch (m) {
    case CorrectionMode::Global: return "global";
    case CorrectionMode::Apap: return "apap";
    case CorrectionMode::ApapLut: return "apap-lut";
  }
  return "?";
}

BiasCorrector::BiasCorrector(TrainingCorpus corpus, CorrectionMode mode, const CorrectionOptions& opts)
    : mode_(mode), opts_(opts) {
  switch (mode) {
    case CorrectionMode::Global:
      global_ = fit_global(corpus, opts.als).transform;
      break;
    case CorrectionMode::Apap:
      validate(opts.apap);
      corpus_ = std::move(corpus);
      break;
    case CorrectionMode::ApapLut:
      lut_ = build_lut(corpus, opts.lut_size, opts.lut_bounds, opts.apap, opts.als, opts.threads).grid;
      break;
  }
}

BiasCorrector BiasCorrector::from_transform(const ProjectiveTransform& p) {
  BiasCorrector c;
  c.mode_ = CorrectionMode::Global;
  c.global_ = p;
  return c;
}

BiasCorrector BiasCorrector::from_lut(LutGrid grid) {
  BiasCorrector c;
  c.mode_ = CorrectionMode::ApapLut;
  c.lut_ = std::move(grid);
  return c;
}

CorrectedIlluminant BiasCorrector::correct(const IlluminantVec& q) const {
  switch (mode_) {
    case CorrectionMode::Global: return apply(*global_, q);
    case CorrectionMode::Apap: return apply(fit_apap(q, *corpus_, opts_.apap, opts_.als).transform, q);
    case CorrectionMode::ApapLut: return query(*lut_, q);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown correction mode");
}

CorrectedIlluminant correct(const IlluminantVec& query, const TrainingCorpus& corpus, CorrectionMode mode,
                            const CorrectionOptions& opts) {
  return BiasCorrector(corpus, mode, opts).correct(query);
}

}  // namespace illum
