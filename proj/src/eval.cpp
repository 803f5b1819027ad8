#include "illum/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"

namespace illum {

namespace {

using nlohmann::json;

double mean_of(const std::vector<double>& sorted, std::size_t first, std::size_t count) {
  double s = 0.0;
  for (std::size_t i = first; i < first + count; ++i) s += sorted[i];
  return s / static_cast<double>(count);
}

double median_of(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

TimingStats summarize_timing(std::vector<double> ms) {
  TimingStats t;
  t.n = ms.size();
  if (ms.empty()) return t;
  std::sort(ms.begin(), ms.end());
  t.mean_ms = mean_of(ms, 0, ms.size());
  t.median_ms = median_of(ms);
  t.max_ms = ms.back();
  return t;
}

CorrectionMode correction_mode(EvalMode m) {
  switch (m) {
    case EvalMode::Global: return CorrectionMode::Global;
    case EvalMode::Apap: return CorrectionMode::Apap;
    case EvalMode::ApapLut: return CorrectionMode::ApapLut;
    case EvalMode::Raw: break;
  }
  throw Error(ErrorCode::InvalidArgument, "raw mode has no correction");
}

struct ImageOutcome {
  std::optional<double> error;
  double ms = 0.0;
  std::string message;
};

EvalReport evaluate(const DatasetManifest& manifest, const EvalConfig& cfg,
                    const std::vector<std::vector<std::optional<IlluminantVec>>>& estimates,
                    std::vector<EvalFailure> failures) {
  if (cfg.estimators.empty() || cfg.modes.empty()) {
    throw Error(ErrorCode::InvalidArgument, "at least one estimator and one mode are required");
  }
  if (estimates.size() != cfg.estimators.size()) {
    throw Error(ErrorCode::InvalidArgument, "estimate table does not match the estimator list");
  }
  for (const auto& col : estimates) {
    if (col.size() != manifest.records.size()) {
      throw Error(ErrorCode::InvalidArgument, "estimate table does not match the manifest");
    }
  }
  if (cfg.folds < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");

  std::map<std::string, std::vector<std::size_t>> by_camera;
  for (std::size_t r = 0; r < manifest.records.size(); ++r) {
    const auto& rec = manifest.records[r];
    if (rec.fold < 1 || rec.fold > cfg.folds) {
      throw Error(ErrorCode::MissingFoldLabel, rec.image_path + " has no fold label in 1.." + std::to_string(cfg.folds));
    }
    by_camera[rec.camera_id].push_back(r);
  }

  EvalReport report;
  report.dataset = manifest.name;
  report.folds = cfg.folds;

  for (const auto& [camera, indices] : by_camera) {
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
      const std::string est_name(to_string(cfg.estimators[e].method));
      const auto& est = estimates[e];
      std::vector<std::vector<double>> errors(cfg.modes.size());
      std::vector<std::vector<double>> times(cfg.modes.size());
      std::vector<std::size_t> excluded(cfg.modes.size(), 0);

      for (int f = 1; f <= cfg.folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t r : indices) (manifest.records[r].fold == f ? test : train).push_back(r);
        if (test.empty()) continue;

        std::set<std::string> train_paths;
        for (std::size_t r : train) train_paths.insert(manifest.records[r].image_path);
        for (std::size_t r : test) {
          if (train_paths.count(manifest.records[r].image_path)) {
            throw Error(ErrorCode::InvalidArgument,
                        "fold leak: " + manifest.records[r].image_path + " is in both train and test");
          }
        }

        std::vector<IlluminantVec> train_est, train_gt;
        for (std::size_t r : train) {
          if (!est[r]) continue;
          train_est.push_back(*est[r]);
          train_gt.push_back(manifest.records[r].gt_illuminant);
        }

        for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
          const EvalMode mode = cfg.modes[m];
          std::optional<BiasCorrector> corrector;
          if (mode != EvalMode::Raw) {
            corrector.emplace(TrainingCorpus(train_est, train_gt, est_name, camera), correction_mode(mode),
                              cfg.correction);
          }
          std::vector<ImageOutcome> out(test.size());
          detail::parallel_for(test.size(), cfg.threads, [&](std::size_t t) {
            const std::size_t r = test[t];
            if (!est[r]) return;
            const auto& gt = manifest.records[r].gt_illuminant;
            if (!corrector) {
              out[t].error = angular_error(*est[r], gt).value;
              return;
            }
            try {
              const auto start = std::chrono::steady_clock::now();
              const CorrectedIlluminant c = corrector->correct(*est[r]);
              const auto stop = std::chrono::steady_clock::now();
              out[t].ms = std::chrono::duration<double, std::milli>(stop - start).count();
              out[t].error = angular_error(c.value, gt).value;
            } catch (const Error& err) {
              out[t].message = err.what();
            }
          });
          for (std::size_t t = 0; t < test.size(); ++t) {
            if (out[t].error) {
              errors[m].push_back(*out[t].error);
              times[m].push_back(out[t].ms);
              continue;
            }
            ++excluded[m];
            if (!out[t].message.empty()) {
              failures.push_back({manifest.records[test[t]].image_path, est_name, std::string(to_string(mode)),
                                  out[t].message});
            }
          }
        }
      }

      for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
        EvalRow row;
        row.camera = camera;
        row.estimator = est_name;
        row.mode = cfg.modes[m];
        if (!errors[m].empty()) row.stats = summarize(errors[m]);
        row.excluded = excluded[m];
        if (cfg.timing && row.mode != EvalMode::Raw) row.timing = summarize_timing(times[m]);
        report.rows.push_back(std::move(row));
      }
    }
  }
  report.failures = std::move(failures);
  report.warnings = report.failures.size();
  return report;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string format_table(const EvalReport& report) {
  std::ostringstream os;
  os << "dataset: " << (report.dataset.empty() ? "-" : report.dataset) << ", " << report.folds
     << "-fold cross-validation\n";
  const bool timing = std::any_of(report.rows.begin(), report.rows.end(), [](const EvalRow& r) { return r.timing; });
  std::size_t cam_w = 6, est_w = 9;
  for (const auto& r : report.rows) {
    cam_w = std::max(cam_w, r.camera.size());
    est_w = std::max(est_w, r.estimator.size());
  }
  os << pad("camera", cam_w + 2) << pad("estimator", est_w + 2) << pad("mode", 10) << pad("n", 6, true)
     << pad("Mean", 9, true) << pad("Median", 9, true) << pad("Best 25%", 10, true) << pad("Worst 25%", 11, true);
  if (timing) os << pad("ms/query", 10, true);
  os << '\n';
  for (const auto& r : report.rows) {
    os << pad(r.camera, cam_w + 2) << pad(r.estimator, est_w + 2) << pad(std::string(to_string(r.mode)), 10)
       << pad(std::to_string(r.stats.n), 6, true) << pad(fixed(r.stats.mean, 2), 9, true)
       << pad(fixed(r.stats.median, 2), 9, true) << pad(fixed(r.stats.best25, 2), 10, true)
       << pad(fixed(r.stats.worst25, 2), 11, true);
    if (timing) os << pad(r.timing ? fixed(r.timing->mean_ms, 4) : std::string("-"), 10, true);
    os << '\n';
  }
  if (report.warnings) os << "warnings: " << report.warnings << " image(s) excluded after failures\n";
  return os.str();
}

std::string format_csv(const EvalReport& report) {
  std::ostringstream os;
  const bool timing = std::any_of(report.rows.begin(), report.rows.end(), [](const EvalRow& r) { return r.timing; });
  os << "camera,estimator,mode,n,excluded,mean,median,best25,worst25";
  if (timing) os << ",time_mean_ms,time_median_ms,time_max_ms";
  os << '\n';
  for (const auto& r : report.rows) {
    os << csv_field(r.camera) << ',' << csv_field(r.estimator) << ',' << to_string(r.mode) << ',' << r.stats.n
       << ',' << r.excluded << ',' << fixed(r.stats.mean, 6) << ',' << fixed(r.stats.median, 6) << ','
       << fixed(r.stats.best25, 6) << ',' << fixed(r.stats.worst25, 6);
    if (timing) {
      if (r.timing) {
        os << ',' << fixed(r.timing->mean_ms, 6) << ',' << fixed(r.timing->median_ms, 6) << ','
           << fixed(r.timing->max_ms, 6);
      } else {
        os << ",,,";
      }
    }
    os << '\n';
  }
  return os.str();
}

json to_json(const EvalReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = {{"camera", r.camera},         {"estimator", r.estimator},   {"mode", to_string(r.mode)},
                {"n", r.stats.n},             {"excluded", r.excluded},     {"mean", r.stats.mean},
                {"median", r.stats.median},   {"best25", r.stats.best25},   {"worst25", r.stats.worst25}};
    if (r.timing) {
      row["timing"] = {{"mean_ms", r.timing->mean_ms},
                       {"median_ms", r.timing->median_ms},
                       {"max_ms", r.timing->max_ms},
                       {"n", r.timing->n}};
    }
    rows.push_back(std::move(row));
  }
  json failures = json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"image", f.image}, {"estimator", f.estimator}, {"stage", f.stage}, {"message", f.message}});
  }
  return {{"schema_version", report.schema_version},
          {"dataset", report.dataset},
          {"folds", report.folds},
          {"rows", std::move(rows)},
          {"failures", std::move(failures)},
          {"warnings", report.warnings}};
}

}  // namespace

ErrorStats summarize(std::vector<double> errors) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "no errors to summarize");
  std::sort(errors.begin(), errors.end());
  const std::size_t n = errors.size();
  const std::size_t q = (n + 3) / 4;
  ErrorStats s;
  s.n = n;
  s.mean = mean_of(errors, 0, n);
  s.median = median_of(errors);
  s.best25 = mean_of(errors, 0, q);
  s.worst25 = mean_of(errors, n - q, q);
  return s;
}

std::string_view to_string(EvalMode m) {
  switch (m) {
    case EvalMode::Raw: return "raw";
    case EvalMode::Global: return "global";
    case EvalMode::Apap: return "apap";
    case EvalMode::ApapLut: return "apap-lut";
  }
  return "?";
}

EvalMode parse_eval_mode(std::string_view name) {
  for (EvalMode m : {EvalMode::Raw, EvalMode::Global, EvalMode::Apap, EvalMode::ApapLut}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(name) + "' (raw, global, apap, apap-lut)");
}

const EvalRow* EvalReport::find(std::string_view camera, std::string_view estimator, EvalMode mode) const {
  for (const auto& r : rows) {
    if (r.camera == camera && r.estimator == estimator && r.mode == mode) return &r;
  }
  return nullptr;
}

EvalReport run_cross_validation_on_estimates(const DatasetManifest& manifest, const EvalConfig& cfg,
                                             const std::vector<std::vector<std::optional<IlluminantVec>>>& estimates) {
  return evaluate(manifest, cfg, estimates, {});
}

EvalReport run_cross_validation(const DatasetManifest& manifest, const EvalConfig& cfg, const SampleLoader& loader) {
  const std::size_t n = manifest.records.size();
  const std::size_t ne = cfg.estimators.size();
  std::vector<std::vector<std::optional<IlluminantVec>>> estimates(ne, std::vector<std::optional<IlluminantVec>>(n));
  std::vector<std::vector<std::string>> messages(ne, std::vector<std::string>(n));

  detail::parallel_for(n, cfg.threads, [&](std::size_t r) {
    RawImage img;
    try {
      img = loader ? loader(manifest.records[r]) : load_sample(manifest.records[r], cfg.image_size);
    } catch (const Error& err) {
      for (std::size_t e = 0; e < ne; ++e) messages[e][r] = err.what();
      return;
    }
    for (std::size_t e = 0; e < ne; ++e) {
      try {
        estimates[e][r] = estimate(img, cfg.estimators[e]);
      } catch (const Error& err) {
        messages[e][r] = err.what();
      }
    }
  });

  std::vector<EvalFailure> failures;
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t r = 0; r < n; ++r) {
      if (!messages[e][r].empty()) {
        failures.push_back({manifest.records[r].image_path, std::string(to_string(cfg.estimators[e].method)),
                            "estimate", messages[e][r]});
      }
    }
  }
  return evaluate(manifest, cfg, estimates, std::move(failures));
}

std::vector<std::optional<IlluminantVec>> estimate_records(const DatasetManifest& manifest,
                                                           const EstimatorConfig& estimator, ImageSize size,
                                                           int threads, std::vector<EvalFailure>* failures) {
  const std::size_t n = manifest.records.size();
  std::vector<std::optional<IlluminantVec>> out(n);
  std::vector<std::string> messages(n);
  detail::parallel_for(n, threads, [&](std::size_t r) {
    try {
      out[r] = estimate(load_sample(manifest.records[r], size), estimator);
    } catch (const Error& err) {
      messages[r] = err.what();
    }
  });
  if (failures) {
    for (std::size_t r = 0; r < n; ++r) {
      if (!messages[r].empty()) {
        failures->push_back({manifest.records[r].image_path, std::string(to_string(estimator.method)), "estimate",
                             messages[r]});
      }
    }
  }
  return out;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::Table;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(name) + "' (table, csv, json)");
}

std::string format_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return format_table(report);
    case ReportFormat::Csv: return format_csv(report);
    case ReportFormat::Json: return to_json(report).dump(2) + "\n";
  }
  return {};
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << format_report(report, format);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

EvalReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != EvalReport::kSchemaVersion) {
      throw Error(ErrorCode::ParseError, "unsupported report schema " + std::to_string(r.schema_version));
    }
    r.dataset = j.at("dataset").get<std::string>();
    r.folds = j.at("folds").get<int>();
    for (const auto& jr : j.at("rows")) {
      EvalRow row;
      row.camera = jr.at("camera").get<std::string>();
      row.estimator = jr.at("estimator").get<std::string>();
      row.mode = parse_eval_mode(jr.at("mode").get<std::string>());
      row.stats.n = jr.at("n").get<std::size_t>();
      row.excluded = jr.at("excluded").get<std::size_t>();
      row.stats.mean = jr.at("mean").get<double>();
      row.stats.median = jr.at("median").get<double>();
      row.stats.best25 = jr.at("best25").get<double>();
      row.stats.worst25 = jr.at("worst25").get<double>();
      if (jr.contains("timing")) {
        const auto& t = jr.at("timing");
        row.timing = TimingStats{t.at("mean_ms").get<double>(), t.at("median_ms").get<double>(),
                                 t.at("max_ms").get<double>(), t.at("n").get<std::size_t>()};
      }
      r.rows.push_back(std::move(row));
    }
    for (const auto& jf : j.at("failures")) {
      r.failures.push_back({jf.at("image").get<std::string>(), jf.at("estimator").get<std::string>(),
                            jf.at("stage").get<std::string>(), jf.at("message").get<std::string>()});
    }
    r.warnings = j.at("warnings").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report JSON: ") + e.what());
  }
}

}  // namespace illum
