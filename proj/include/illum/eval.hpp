#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "illum/correction.hpp"
#include "illum/dataset.hpp"
#include "illum/estimators.hpp"

namespace illum {

/// Angular error statistics in degrees. best25 / worst25 average the
/// ceil(n / 4) smallest / largest errors; the median of an even count is the
/// mean of the two middle values.
struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double best25 = 0.0;
  double worst25 = 0.0;
  std::size_t n = 0;
  friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

ErrorStats summarize(std::vector<double> errors_deg);

enum class EvalMode { Raw, Global, Apap, ApapLut };

/// raw, global, apap, apap-lut
std::string_view to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view name);

/// Wall-clock time of the bias-correction call alone, milliseconds.
struct TimingStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double max_ms = 0.0;
  std::size_t n = 0;
  friend bool operator==(const TimingStats&, const TimingStats&) = default;
};

struct EvalRow {
  std::string camera;
  std::string estimator;
  EvalMode mode = EvalMode::Raw;
  ErrorStats stats;
  std::size_t excluded = 0;  // images dropped from this row after a failure
  std::optional<TimingStats> timing;
  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalFailure {
  std::string image;
  std::string estimator;
  std::string stage;  // "estimate" or a mode name
  std::string message;
  friend bool operator==(const EvalFailure&, const EvalFailure&) = default;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;
  int schema_version = kSchemaVersion;
  std::string dataset;
  int folds = 3;
  std::vector<EvalRow> rows;  // camera, then estimator, then mode, in request order
  std::vector<EvalFailure> failures;
  std::size_t warnings = 0;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;

  const EvalRow* find(std::string_view camera, std::string_view estimator, EvalMode mode) const;
};

struct EvalConfig {
  std::vector<EstimatorConfig> estimators{EstimatorConfig::defaults_for(EstimatorMethod::GrayWorld)};
  std::vector<EvalMode> modes{EvalMode::Raw, EvalMode::Global, EvalMode::Apap, EvalMode::ApapLut};
  CorrectionOptions correction;
  ImageSize image_size;
  int folds = 3;
  int threads = 0;
  bool timing = false;  // off keeps reports byte-for-byte reproducible
};

using SampleLoader = std::function<RawImage(const SampleRecord&)>;

/// Per camera and held-out fold: trains each correction on the other folds'
/// estimates, corrects the held-out estimates and pools the per-image errors
/// across folds before summarizing. `loader` defaults to load_sample at the
/// configured size.
EvalReport run_cross_validation(const DatasetManifest& manifest, const EvalConfig& cfg,
                                const SampleLoader& loader = {});

/// Same, with the estimator outputs already known: estimates[e][r] belongs to
/// estimator e and manifest record r (nullopt = estimation failed).
EvalReport run_cross_validation_on_estimates(const DatasetManifest& manifest, const EvalConfig& cfg,
                                             const std::vector<std::vector<std::optional<IlluminantVec>>>& estimates);

/// Loads every record and runs one estimator on it. Failing records yield
/// nullopt and, when `failures` is given, an entry there.
std::vector<std::optional<IlluminantVec>> estimate_records(const DatasetManifest& manifest,
                                                           const EstimatorConfig& estimator, ImageSize size,
                                                           int threads = 0,
                                                           std::vector<EvalFailure>* failures = nullptr);

enum class ReportFormat { Table, Csv, Json };
ReportFormat parse_report_format(std::string_view name);

std::string format_report(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);
EvalReport report_from_json(std::string_view text);

}  // namespace illum
