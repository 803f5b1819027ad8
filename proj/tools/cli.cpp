#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "illum/correction.hpp"
#include "illum/dataset.hpp"
#include "illum/estimators.hpp"
#include "illum/eval.hpp"
#include "illum/image_codec.hpp"
#include "illum/lut.hpp"
#include "illum/synth.hpp"

namespace illum::cli {

namespace {

struct SettingDef {
  const char* key;
  const char* flag;
  const char* default_value;
  const char* source;
};

// Every tunable with its default and where that default comes from.
const SettingDef kSettings[] = {
    {"apap.sigma_w", "sigma-w", "3.0", "reference APAP setting: weight scale sigma_w, degrees"},
    {"apap.gamma", "gamma", "0.0625", "reference APAP setting: weight floor gamma"},
    {"lut.size", "lut-size", "16", "reference LUT setting: 16x16 chromaticity bins"},
    {"sog.p", "sog-p", "4", "reference Shades-of-Gray setting: Minkowski p = 4"},
    {"ge.p", "ge-p", "6", "reference Gray-Edge setting: Minkowski p = 6"},
    {"ge.sigma", "ge-sigma", "2", "reference Gray-Edge setting: Gaussian sigma = 2 px"},
    {"pca.percent", "pca-percent", "3.5", "reference PCA setting: brightest/darkest 3.5% of pixels"},
    {"image.width", "width", "384", "reference preprocessing: images resized to 384x256"},
    {"image.height", "height", "256", "reference preprocessing: images resized to 384x256"},
    {"als.threshold", "als-threshold", "1e-8", "ALS stopping threshold on ||D(q) - D(q-1)||_F"},
    {"als.max_iters", "als-max-iters", "100", "ALS iteration cap"},
    {"threads", "threads", "0", "worker threads; 0 uses every hardware thread"},
};

std::string env_name(const std::string& key) {
  std::string out = "ILLUM_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, what + ": '" + text + "' is not a number");
  }
  return v;
}

int parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::InvalidArgument, what + ": '" + text + "' is not an integer");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

class Settings {
 public:
  struct Value {
    std::string text;
    std::string origin;
  };

  Settings() {
    for (const auto& def : kSettings) values_[def.key] = {def.default_value, "default"};
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open config file " + path);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected key = value");
      }
      std::string key = trim(std::string_view(line).substr(0, eq));
      std::string value = trim(std::string_view(line).substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      if (!section.empty()) key = section + "." + key;
      set(key, value, "config " + path + ":" + std::to_string(lineno));
    }
  }

  void load_env(const EnvLookup& env) {
    for (const auto& def : kSettings) {
      if (auto v = env(env_name(def.key))) set(def.key, *v, "env " + env_name(def.key));
    }
  }

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorCode::InvalidArgument, "unknown setting '" + key + "'");
    it->second = {value, origin};
  }

  double real(const std::string& key) const { return parse_real(values_.at(key).text, key); }
  int integer(const std::string& key) const { return parse_int(values_.at(key).text, key); }
  const Value& at(const std::string& key) const { return values_.at(key); }

 private:
  std::map<std::string, Value> values_;
};

struct Resolved {
  ApapConfig apap;
  AlsConfig als;
  int lut_size = 16;
  double sog_p = 4.0;
  double ge_p = 6.0;
  double ge_sigma = 2.0;
  double pca_fraction = 0.035;
  ImageSize image;
  int threads = 0;

  CorrectionOptions correction() const {
    CorrectionOptions o;
    o.apap = apap;
    o.als = als;
    o.lut_size = lut_size;
    o.threads = threads;
    return o;
  }

  EstimatorConfig estimator(const std::string& name) const {
    EstimatorConfig c = EstimatorConfig::defaults_for(parse_estimator(name));
    switch (c.method) {
      case EstimatorMethod::ShadesOfGray: c.p = sog_p; break;
      case EstimatorMethod::GrayEdge1:
      case EstimatorMethod::GrayEdge2:
        c.p = ge_p;
        c.sigma = ge_sigma;
        break;
      case EstimatorMethod::PcaBrightDark: c.pca_percent = pca_fraction; break;
      default: break;
    }
    return c;
  }
};

Resolved resolve(const Settings& s) {
  Resolved r;
  r.apap.sigma_w = s.real("apap.sigma_w");
  r.apap.gamma = s.real("apap.gamma");
  validate(r.apap);
  r.als.threshold = s.real("als.threshold");
  r.als.max_iters = s.integer("als.max_iters");
  validate(r.als);
  r.lut_size = s.integer("lut.size");
  if (r.lut_size < 2) throw Error(ErrorCode::InvalidArgument, "lut.size must be at least 2");
  r.sog_p = s.real("sog.p");
  r.ge_p = s.real("ge.p");
  if (r.sog_p < 1.0 || r.ge_p < 1.0) throw Error(ErrorCode::InvalidArgument, "Minkowski p must be >= 1");
  r.ge_sigma = s.real("ge.sigma");
  if (!(r.ge_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "ge.sigma must be positive");
  const double pct = s.real("pca.percent");
  if (!(pct > 0.0 && pct <= 50.0)) throw Error(ErrorCode::InvalidArgument, "pca.percent must lie in (0, 50]");
  r.pca_fraction = pct / 100.0;
  r.image.width = s.integer("image.width");
  r.image.height = s.integer("image.height");
  if (r.image.width < 1 || r.image.height < 1) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  r.threads = s.integer("threads");
  if (r.threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 0");
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
}

IlluminantVec parse_rgb(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "--estimate expects r,g,b: '" + text + "'");
  return IlluminantVec(parse_real(parts[0], "--estimate"), parse_real(parts[1], "--estimate"),
                       parse_real(parts[2], "--estimate"));
}

ChannelLevels parse_levels(const std::string& text, const std::string& what) {
  const auto parts = split(text, ',');
  if (parts.size() == 1) {
    const int v = parse_int(parts[0], what);
    return {v, v, v};
  }
  if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, what + " expects one value or three");
  return {parse_int(parts[0], what), parse_int(parts[1], what), parse_int(parts[2], what)};
}

bool has_extension(const std::string& path, std::initializer_list<const char*> exts) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::any_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; });
}

void print_config(const Settings& s, std::ostream& out) {
  out << "# effective settings: flags > ILLUM_* environment > --config file > defaults\n";
  for (const auto& def : kSettings) {
    const auto& v = s.at(def.key);
    out << def.key << " = " << v.text << "  # " << def.source << " (from " << v.origin << ")\n";
  }
}

// -- subcommands -------------------------------------------------------------

struct TrainArgs {
  std::string manifest, estimator = "gw", mode = "global", out, fold_train;
};

int cmd_train(const TrainArgs& a, const Resolved& r, std::ostream& out, std::ostream& err) {
  DatasetManifest manifest = load_manifest(a.manifest);
  if (!a.fold_train.empty()) {
    std::vector<int> folds;
    for (const auto& f : split(a.fold_train, ',')) folds.push_back(parse_int(f, "--fold-train"));
    std::erase_if(manifest.records, [&](const SampleRecord& rec) {
      return std::find(folds.begin(), folds.end(), rec.fold) == folds.end();
    });
  }
  const EstimatorConfig est_cfg = r.estimator(a.estimator);
  const std::string method(to_string(est_cfg.method));
  std::vector<EvalFailure> failures;
  const auto estimates = estimate_records(manifest, est_cfg, r.image, r.threads, &failures);
  for (const auto& f : failures) err << "warning: skipped " << f.image << ": " << f.message << '\n';

  std::vector<IlluminantVec> est, gt;
  std::string camera;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i]) continue;
    est.push_back(*estimates[i]);
    gt.push_back(manifest.records[i].gt_illuminant);
    if (camera.empty()) camera = manifest.records[i].camera_id;
  }
  const TrainingCorpus corpus(est, gt, method, camera);

  if (a.mode == "global") {
    const AlsResult fit = fit_global(corpus, r.als);
    if (!fit.converged) err << "warning: ALS stopped after " << fit.iterations << " sweeps without converging\n";
    write_text(a.out, transform_to_json({fit.transform, method, camera}));
  } else if (a.mode == "apap") {
    write_text(a.out, corpus_to_json(corpus));
  } else if (a.mode == "apap-lut") {
    const LutBuildResult lut = build_lut(corpus, r.lut_size, {}, r.apap, r.als, r.threads);
    if (!lut.failed_nodes.empty()) {
      err << "warning: " << lut.failed_nodes.size() << " LUT node(s) fell back to the global transform\n";
    }
    if (!lut.unconverged_nodes.empty()) {
      err << "warning: " << lut.unconverged_nodes.size() << " LUT node(s) hit the ALS iteration cap\n";
    }
    const auto bytes = serialize(lut.grid);
    std::ofstream f(a.out, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + a.out);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown --mode '" + a.mode + "' (global, apap, apap-lut)");
  }
  out << "trained " << a.mode << " on " << corpus.size() << " pairs -> " << a.out << '\n';
  return kOk;
}

struct CorrectArgs {
  std::string input, estimate, transform, lut, corpus, estimator = "gw", preview, black = "0", sat = "65535", mask;
  int precision = 4;
};

int cmd_correct(const CorrectArgs& a, const Resolved& r, std::ostream& out, std::ostream& err) {
  if (a.input.empty() == a.estimate.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --input or --estimate");
  }
  const int sources = !a.transform.empty() + !a.lut.empty() + !a.corpus.empty();
  if (sources != 1) throw Error(ErrorCode::InvalidArgument, "give exactly one of --transform, --lut or --corpus");
  if (!a.preview.empty() && a.input.empty()) throw Error(ErrorCode::InvalidArgument, "--preview needs --input");
  if (a.precision < 0 || a.precision > 17) throw Error(ErrorCode::InvalidArgument, "--precision must be in 0..17");

  // Parse everything the user typed before touching any file.
  std::optional<IlluminantVec> est;
  if (!a.estimate.empty()) est = parse_rgb(a.estimate);
  const ChannelLevels black = parse_levels(a.black, "--black");
  const ChannelLevels sat = parse_levels(a.sat, "--sat");
  const EstimatorConfig est_cfg = r.estimator(a.estimator);
  std::vector<MaskRect> mask;
  if (!a.mask.empty()) mask = parse_mask_rects(a.mask);

  std::optional<BiasCorrector> corrector;
  if (!a.transform.empty()) {
    const TransformFile tf = transform_from_json(read_text(a.transform));
    if (!a.input.empty() && !tf.method.empty() && tf.method != to_string(est_cfg.method)) {
      err << "warning: transform was trained on '" << tf.method << "' estimates\n";
    }
    corrector = BiasCorrector::from_transform(tf.transform);
  } else if (!a.lut.empty()) {
    corrector = BiasCorrector::from_lut(deserialize(read_bytes(a.lut)));
  } else {
    corrector.emplace(corpus_from_json(read_text(a.corpus)), CorrectionMode::Apap, r.correction());
  }

  RawImage full;
  if (!a.input.empty()) {
    full = normalize_raw(read_image16(a.input), black, sat);
    apply_mask_rects(full, mask);
    if (full.unmasked_count() == 0) throw Error(ErrorCode::AllMasked, a.input);
    est = estimate(downsample(full, r.image.width, r.image.height), est_cfg);
  }

  const CorrectedIlluminant c = corrector->correct(*est);
  if (c.clamped) err << "warning: negative component clamped to zero\n";
  out << fixed(c.value.r(), a.precision) << ',' << fixed(c.value.g(), a.precision) << ','
      << fixed(c.value.b(), a.precision) << '\n';

  if (!a.preview.empty()) {
    const Raw16Image balanced = to_raw16(white_balance(full, c.value));
    if (has_extension(a.preview, {".tif", ".tiff"})) write_tiff16(a.preview, balanced);
    else write_png16(a.preview, balanced);
  }
  return kOk;
}

struct EvalArgs {
  std::string manifest, estimators = "gw", modes = "raw,global,apap,apap-lut", format = "table", out;
  int folds = 3;
  bool timing = false;
};

int cmd_eval(const EvalArgs& a, const Resolved& r, std::ostream& out, std::ostream& err) {
  EvalConfig cfg;
  cfg.estimators.clear();
  for (const auto& e : split(a.estimators, ',')) cfg.estimators.push_back(r.estimator(e));
  cfg.modes.clear();
  for (const auto& m : split(a.modes, ',')) cfg.modes.push_back(parse_eval_mode(m));
  const ReportFormat format = parse_report_format(a.format);
  cfg.correction = r.correction();
  cfg.image_size = r.image;
  cfg.folds = a.folds;
  cfg.threads = r.threads;
  cfg.timing = a.timing;

  const DatasetManifest manifest = load_manifest(a.manifest);
  const EvalReport report = run_cross_validation(manifest, cfg);
  for (const auto& f : report.failures) {
    err << "warning: excluded " << f.image << " (" << f.estimator << ", " << f.stage << "): " << f.message << '\n';
  }
  if (a.out.empty()) out << format_report(report, format);
  else emit_report(report, format, a.out);
  return kOk;
}

struct SynthArgs {
  std::string spec, preset = "planted", out;
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthSpec spec;
  if (!a.spec.empty()) {
    spec = synth_spec_from_json(read_text(a.spec));
  } else if (a.preset == "two-cluster") {
    spec = two_cluster_spec(1);
  } else if (a.preset == "planted") {
    spec.camera = "planted";
    spec.plants = {random_plant(1, 0.15)};
  } else if (a.preset == "uniform") {
    spec.camera = "uniform";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown --preset '" + a.preset + "' (planted, two-cluster, uniform)");
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.n) spec.n_images = *a.n;
  const SynthDataset data = generate(spec);
  export_dataset(data, spec, a.out);
  out << "wrote " << data.images.size() << " images to " << a.out << '\n';
  return kOk;
}

int cmd_lut_inspect(const std::string& path, bool header_only, std::ostream& out) {
  const auto bytes = read_bytes(path);
  const LutGrid g = deserialize(bytes);
  out << "file: " << path << '\n'
      << "file_bytes: " << bytes.size() << '\n'
      << "magic: APLU\nversion: 1\n"
      << "L: " << g.size << '\n'
      << "bounds: u1 [" << g.bounds.u1_min << ", " << g.bounds.u1_max << "], u2 [" << g.bounds.u2_min << ", "
      << g.bounds.u2_max << "]\n"
      << "method: " << g.method_tag << '\n'
      << "camera: " << g.camera_tag << '\n'
      << "payload_bytes: " << lut_payload_bytes(g.size) << '\n'
      << "checksum: ok\n";
  if (header_only) return kOk;
  for (int i = 0; i < g.size; ++i) {
    for (int j = 0; j < g.size; ++j) {
      const auto c = g.node_chromaticity(i, j);
      const auto& m = g.node(i, j).m;
      out << "node " << i << ' ' << j << " (u1 " << fixed(c.u1, 4) << ", u2 " << fixed(c.u2, 4) << "):";
      for (int rr = 0; rr < 3; ++rr)
        for (int cc = 0; cc < 3; ++cc) out << ' ' << fixed(m(rr, cc), 6);
      out << '\n';
    }
  }
  return kOk;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return kConfigError;
    case ErrorCode::BadLevels:
    case ErrorCode::ParseError:
    case ErrorCode::MissingImage:
    case ErrorCode::InvalidLevels:
    case ErrorCode::DecodeError:
    case ErrorCode::AllMasked:
    case ErrorCode::MissingFoldLabel:
    case ErrorCode::BadMagic:
    case ErrorCode::BadVersion:
    case ErrorCode::TruncatedStream:
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::IoError:
    case ErrorCode::TooSmall:
    case ErrorCode::EmptyInput:
      return kDataError;
    case ErrorCode::ZeroVector:
    case ErrorCode::DegenerateSum:
    case ErrorCode::CollapsedOutput:
    case ErrorCode::DegenerateCorpus:
    case ErrorCode::SingularSystem:
    case ErrorCode::EigenFailure:
    case ErrorCode::SelectionEmpty:
    case ErrorCode::NonPositiveIlluminant:
    case ErrorCode::SingularPlant:
      return kNumericError;
  }
  return kRuntimeError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env_in) {
  const EnvLookup env = env_in ? env_in : [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };

  CLI::App app{"Illuminant estimation and projective bias correction"};
  app.name(args.empty() ? "illum" : std::filesystem::path(args[0]).filename().string());
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  bool show_config = false;
  app.add_option("--config", config_path, "Settings file with key = value lines");
  app.add_flag("--print-config", show_config, "Print every setting with its source and exit");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const auto& def : kSettings) {
    flag_options[def.key] =
        app.add_option(std::string("--") + def.flag, flag_values[def.key], std::string("Override ") + def.key);
  }

  TrainArgs train;
  auto* sc_train = app.add_subcommand("train", "Fit a global transform, APAP corpus or APAP LUT");
  sc_train->add_option("--manifest", train.manifest, "Dataset manifest CSV")->required();
  sc_train->add_option("--estimator", train.estimator, "gw, maxrgb, sog, ge1, ge2 or pca");
  sc_train->add_option("--mode", train.mode, "global, apap or apap-lut");
  sc_train->add_option("--out", train.out, "Output artifact")->required();
  sc_train->add_option("--fold-train", train.fold_train, "Train only on these folds, e.g. 1,2");

  CorrectArgs corr;
  auto* sc_correct = app.add_subcommand("correct", "Correct one estimate or one image");
  sc_correct->add_option("--input", corr.input, "16-bit PNG/TIFF image");
  sc_correct->add_option("--estimate", corr.estimate, "Raw estimate r,g,b");
  sc_correct->add_option("--transform", corr.transform, "Global transform JSON");
  sc_correct->add_option("--lut", corr.lut, "APLU lookup table");
  sc_correct->add_option("--corpus", corr.corpus, "Training corpus JSON for per-query APAP");
  sc_correct->add_option("--estimator", corr.estimator, "Estimator applied to --input");
  sc_correct->add_option("--black", corr.black, "Black level (one value or r,g,b)");
  sc_correct->add_option("--sat", corr.sat, "Saturation level (one value or r,g,b)");
  sc_correct->add_option("--mask", corr.mask, "Excluded rectangles x,y,w,h;...");
  sc_correct->add_option("--precision", corr.precision, "Decimal places in the output");
  sc_correct->add_option("--preview", corr.preview, "Write the white-balanced image here");

  EvalArgs ev;
  auto* sc_eval = app.add_subcommand("eval", "Cross-validated evaluation report");
  sc_eval->add_option("--manifest", ev.manifest, "Dataset manifest CSV")->required();
  sc_eval->add_option("--estimators", ev.estimators, "Comma-separated estimator list");
  sc_eval->add_option("--modes", ev.modes, "Comma-separated: raw, global, apap, apap-lut");
  sc_eval->add_option("--format", ev.format, "table, csv or json");
  sc_eval->add_option("--out", ev.out, "Report file (default stdout)");
  sc_eval->add_option("--folds", ev.folds, "Number of folds");
  sc_eval->add_flag("--timing", ev.timing, "Include per-query correction timing");

  SynthArgs sy;
  std::uint64_t seed = 0;
  int n = 0;
  auto* sc_synth = app.add_subcommand("synth", "Generate and export a synthetic dataset");
  sc_synth->add_option("--spec", sy.spec, "Synthetic spec JSON");
  sc_synth->add_option("--preset", sy.preset, "planted, two-cluster or uniform");
  auto* opt_seed = sc_synth->add_option("--seed", seed, "Override the seed");
  auto* opt_n = sc_synth->add_option("--n", n, "Override the image count");
  sc_synth->add_option("--out", sy.out, "Output directory")->required();

  std::string lut_path;
  bool header_only = false;
  auto* sc_inspect = app.add_subcommand("lut-inspect", "Dump an APLU file");
  sc_inspect->add_option("file", lut_path, "APLU file")->required();
  sc_inspect->add_flag("--header-only", header_only, "Skip the node matrices");

  try {
    // CLI11 consumes a reversed argument list without the program name.
    std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rev.begin(), rev.end());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  Settings settings;
  Resolved resolved;
  try {
    if (!config_path.empty()) settings.load_file(config_path);
    settings.load_env(env);
    for (const auto& def : kSettings) {
      if (flag_options[def.key]->count() > 0) {
        settings.set(def.key, flag_values[def.key], std::string("flag --") + def.flag);
      }
    }
    resolved = resolve(settings);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  if (show_config) {
    print_config(settings, out);
    return kOk;
  }

  try {
    if (sc_train->parsed()) return cmd_train(train, resolved, out, err);
    if (sc_correct->parsed()) return cmd_correct(corr, resolved, out, err);
    if (sc_eval->parsed()) return cmd_eval(ev, resolved, out, err);
    if (sc_synth->parsed()) {
      if (opt_seed->count()) sy.seed = seed;
      if (opt_n->count()) sy.n = n;
      return cmd_synth(sy, out);
    }
    if (sc_inspect->parsed()) return cmd_lut_inspect(lut_path, header_only, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  err << app.help();
  return kConfigError;
}

}  // namespace illum::cli
