#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "../tools/cli.hpp"
#include "illum/dataset.hpp"
#include "illum/estimators.hpp"
#include "illum/lut.hpp"
#include "illum/projective.hpp"
#include "oracles.hpp"

using namespace illum;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, std::map<std::string, std::string> env = {}) {
  args.insert(args.begin(), "illum");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err, [env](const std::string& k) -> std::optional<std::string> {
    const auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return files;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

class CliDataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("cli");
    const auto r = run_cli({"synth", "--preset", "planted", "--seed", "3", "--n", "30", "--out", data().string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path root() { return dir_->path(); }
  static fs::path data() { return dir_->path() / "planted"; }
  static fs::path manifest() { return data() / "manifest.csv"; }

  static oracle::TempDir* dir_;
};
oracle::TempDir* CliDataset::dir_ = nullptr;

}  // namespace

TEST(Cli, IdentityTransformCorrection) {
  oracle::TempDir dir("cli_id");
  TransformFile t;
  write_text(dir.path() / "id.json", transform_to_json(t));
  const auto r = run_cli({"correct", "--estimate", "1,1,1", "--transform", (dir.path() / "id.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.5774,0.5774,0.5774\n");
}

TEST(Cli, ConfigErrorsExitTwo) {
  oracle::TempDir dir("cli_cfg");
  write_text(dir.path() / "id.json", transform_to_json({}));
  const std::string t = (dir.path() / "id.json").string();
  EXPECT_EQ(run_cli({"correct", "--estimate", "1,x,1", "--transform", t}).code, 2);
  EXPECT_EQ(run_cli({"correct", "--estimate", "1,1", "--transform", t}).code, 2);
  EXPECT_EQ(run_cli({"correct", "--estimate", "1,1,1"}).code, 2);
  EXPECT_EQ(run_cli({"eval"}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"--gamma", "0", "--print-config"}).code, 2);
  EXPECT_EQ(run_cli({"--print-config"}, {{"ILLUM_LUT_SIZE", "abc"}}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, MissingManifestExitsThree) {
  const auto r = run_cli({"train", "--manifest", "/nonexistent/m.csv", "--out", "/tmp/x.json"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("/nonexistent/m.csv"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"eval", "--manifest", "/nonexistent/m.csv"}).code, 3);
}

TEST(Cli, PrintConfigPrecedence) {
  oracle::TempDir dir("cli_print");
  const auto defaults = run_cli({"--print-config"});
  ASSERT_EQ(defaults.code, 0);
  for (const char* line : {"apap.sigma_w = 3.0", "apap.gamma = 0.0625", "lut.size = 16", "sog.p = 4", "ge.p = 6",
                           "ge.sigma = 2", "pca.percent = 3.5", "image.width = 384", "image.height = 256",
                           "als.threshold = 1e-8", "als.max_iters = 100"}) {
    EXPECT_NE(defaults.out.find(line), std::string::npos) << line;
  }
  EXPECT_NE(defaults.out.find("(from default)"), std::string::npos);

  write_text(dir.path() / "c.toml", "[apap]\nsigma_w = 4.5\ngamma = 0.1\n\n[lut]\nsize = 8\n");
  const std::string cfg = (dir.path() / "c.toml").string();
  const auto r = run_cli({"--config", cfg, "--gamma", "0.2", "--print-config"}, {{"ILLUM_APAP_SIGMA_W", "5.5"}});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("apap.sigma_w = 5.5"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("apap.gamma = 0.2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("lut.size = 8"), std::string::npos) << r.out;
}

TEST(Cli, SynthIsDeterministic) {
  oracle::TempDir dir("cli_synth");
  const auto a = run_cli({"synth", "--preset", "two-cluster", "--seed", "5", "--n", "12", "--out", (dir.path() / "a").string()});
  const auto b = run_cli({"synth", "--preset", "two-cluster", "--seed", "5", "--n", "12", "--out", (dir.path() / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const auto ta = tree(dir.path() / "a");
  EXPECT_EQ(ta, tree(dir.path() / "b"));
  EXPECT_EQ(ta.size(), 12u + 2u);
  EXPECT_EQ(load_manifest(dir.path() / "a" / "manifest.csv").records.size(), 12u);
  const auto c = run_cli({"synth", "--preset", "two-cluster", "--seed", "6", "--n", "12", "--out", (dir.path() / "c").string()});
  EXPECT_NE(ta, tree(dir.path() / "c"));
  EXPECT_EQ(run_cli({"synth", "--preset", "spiral", "--out", (dir.path() / "d").string()}).code, 2);
}

TEST_F(CliDataset, GlobalTrainRecoversPlant) {
  const fs::path out = root() / "global.json";
  const auto r = run_cli({"train", "--manifest", manifest().string(), "--mode", "global", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = transform_from_json(slurp(out));
  EXPECT_EQ(t.method, "gw");
  const auto m = load_manifest(manifest());
  for (const auto& rec : m.records) {
    const auto est = gray_world(load_sample(rec, {48, 32}));
    EXPECT_LT(angular_error(apply(t.transform, est).value, rec.gt_illuminant).value, 1e-6);
  }
}

TEST_F(CliDataset, ApapLutArtifactAndCorrection) {
  const fs::path out = root() / "model.aplu";
  const auto r = run_cli({"train", "--manifest", manifest().string(), "--mode", "apap-lut", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bytes = slurp(out);
  const LutGrid g = deserialize(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  EXPECT_EQ(g.size, 16);
  EXPECT_EQ(lut_payload_bytes(g.size), 18432u);
  const std::size_t tags = 2 + g.method_tag.size() + 2 + g.camera_tag.size();
  EXPECT_EQ(bytes.size(), 64 + tags + 18432 + 4);

  const auto inspect = run_cli({"lut-inspect", out.string(), "--header-only"});
  EXPECT_EQ(inspect.code, 0);
  EXPECT_NE(inspect.out.find("payload_bytes: 18432"), std::string::npos) << inspect.out;

  const auto m = load_manifest(manifest());
  const auto& rec = m.records[4];
  const auto est = gray_world(load_sample(rec, {48, 32}));
  std::ostringstream e;
  e.precision(17);
  e << est.r() << ',' << est.g() << ',' << est.b();
  const auto c = run_cli({"correct", "--estimate", e.str(), "--lut", out.string(), "--precision", "12"});
  ASSERT_EQ(c.code, 0) << c.err;
  const auto row = csv_rows(c.out).at(0);
  const IlluminantVec got(std::stod(row[0]), std::stod(row[1]), std::stod(row[2]));
  EXPECT_LT(angular_error(got, rec.gt_illuminant).value, 0.5);

  const auto img = run_cli({"correct", "--input", rec.image_path, "--lut", out.string(), "--preview",
                            (root() / "preview.png").string()});
  EXPECT_EQ(img.code, 0) << img.err;
  EXPECT_TRUE(fs::exists(root() / "preview.png"));

  auto corrupt = bytes;
  corrupt[70] ^= 0x10;
  write_text(root() / "bad.aplu", corrupt);
  EXPECT_EQ(run_cli({"lut-inspect", (root() / "bad.aplu").string()}).code, 3);
}

TEST_F(CliDataset, EvalReportShape) {
  const auto a = run_cli({"eval", "--manifest", manifest().string(), "--format", "csv", "--width", "48", "--height", "32"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run_cli({"eval", "--manifest", manifest().string(), "--format", "csv", "--width", "48", "--height", "32"});
  EXPECT_EQ(a.out, b.out);
  const auto rows = csv_rows(a.out);
  ASSERT_EQ(rows.size(), 5u);
  std::map<std::string, double> mean;
  for (std::size_t i = 1; i < rows.size(); ++i) mean[rows[i][2]] = std::stod(rows[i][5]);
  EXPECT_GT(mean["raw"], 1.0);
  EXPECT_LT(mean["global"], 0.5);
  EXPECT_LT(mean["apap"], 0.5);
  EXPECT_LT(mean["apap-lut"], 0.5);

  const auto raw = run_cli({"eval", "--manifest", manifest().string(), "--modes", "raw", "--format", "csv",
                            "--estimators", "gw,maxrgb"});
  ASSERT_EQ(raw.code, 0) << raw.err;
  const auto raw_rows = csv_rows(raw.out);
  ASSERT_EQ(raw_rows.size(), 3u);
  for (std::size_t i = 1; i < raw_rows.size(); ++i) EXPECT_EQ(raw_rows[i][2], "raw");

  const fs::path json = root() / "report.json";
  const auto j = run_cli({"eval", "--manifest", manifest().string(), "--modes", "raw,global", "--format", "json",
                          "--out", json.string()});
  ASSERT_EQ(j.code, 0) << j.err;
  EXPECT_NE(slurp(json).find("\"schema_version\": 1"), std::string::npos);
}
