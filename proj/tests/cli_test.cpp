#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "sz3d/cli.hpp"
#include "sz3d/errors.hpp"
#include "sz3d/manifest.hpp"
#include "sz3d/model_io.hpp"
#include "sz3d/nifti.hpp"
#include "test_support.hpp"

using namespace sz3d;
using namespace sz3d::testing;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Easy phantoms: one fixed site, no jitter, strong dip.
fs::path easy_data(const std::string& name, int n, int seed) {
  const fs::path dir = scratch_dir(name);
  const CliRun r = cli({"gen-synth", "--n", std::to_string(n), "--extents", "12x12x12", "--delta", "0.6", "--seed",
                     std::to_string(seed), "--sites", "1", "--jitter", "0", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir / "manifest.csv";
}

}  // namespace

TEST(Cli, GenSynthPrintsManifestAndIsDeterministic) {
  const fs::path a = scratch_dir("cli_gen_a"), b = scratch_dir("cli_gen_b");
  const CliRun r = cli({"gen-synth", "--n", "20", "--extents", "16x16x16", "--delta", "0.4", "--seed", "7", "--out",
                     a.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find((a / "manifest.csv").string()), std::string::npos);
  EXPECT_EQ(read_manifest(a / "manifest.csv").size(), 40u);
  ASSERT_EQ(cli({"gen-synth", "--n", "20", "--extents", "16x16x16", "--delta", "0.4", "--seed", "7", "--out",
                 b.string()}).code,
            0);
  EXPECT_EQ(slurp(a / "manifest.csv"), slurp(b / "manifest.csv"));
  EXPECT_EQ(slurp(a / "s7_pat_019_gm.nii"), slurp(b / "s7_pat_019_gm.nii"));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"gen-synth", "--n", "20"}).code, 2);
  EXPECT_EQ(cli({"gen-synth", "--n", "20", "--extents", "16x16", "--out", "/tmp/x"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"crossval", "--family", "seq1"}).code, 2);
  EXPECT_EQ(cli({"crossval", "--manifest", "m.csv", "--out", "o", "--family", "resnet50"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);

  const fs::path dir = scratch_dir("cli_cfg");
  std::ofstream(dir / "c.json") << R"({"manifest": "m.csv", "out": "o", "family": "seq1", "epochz": 3})";
  const CliRun r = cli({"crossval", "--config", (dir / "c.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("epochz"), std::string::npos);
  std::ofstream(dir / "d.json") << R"({"manifest": "m.csv", "out": "o", "family": "seq1", "learning_rate": -1})";
  EXPECT_EQ(cli({"crossval", "--config", (dir / "d.json").string()}).code, 2);
  std::ofstream(dir / "e.json") << "{not json";
  EXPECT_EQ(cli({"crossval", "--config", (dir / "e.json").string()}).code, 2);
}

TEST(Cli, RuntimeFailuresExitOne) {
  const fs::path dir = scratch_dir("cli_fail");
  const CliRun r = cli({"crossval", "--manifest", (dir / "missing.csv").string(), "--family", "constant", "--out",
                     (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ConstantFamilyOnSixtyForty) {
  const fs::path dir = scratch_dir("cli_6040");
  ASSERT_EQ(cli({"gen-synth", "--n", "30", "--extents", "8x8x8", "--seed", "1", "--out", dir.string()}).code, 0);
  auto rows = read_manifest(dir / "manifest.csv");
  rows.erase(rows.begin(), rows.begin() + 10);  // 20 controls, 30 patients
  write_manifest(dir / "m6040.csv", rows);
  const CliRun r = cli({"crossval", "--manifest", (dir / "m6040.csv").string(), "--family", "constant", "--out",
                     (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("constant1                60.00%   0.00%    100.00%  0.500"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(dir / "o" / "report.txt"), r.out.substr(0, slurp(dir / "o" / "report.txt").size()));
  const auto csv = lines(slurp(dir / "o" / "folds.csv"));
  ASSERT_EQ(csv.size(), 6u);
  for (std::size_t i = 1; i < csv.size(); ++i) EXPECT_NE(csv[i].find(",0.6,0,1,0.5,6,0,4,0,"), std::string::npos);
}

TEST(Cli, CrossvalReportsAreReproducible) {
  const fs::path m = easy_data("cli_repro_data", 10, 3);
  const fs::path dir = scratch_dir("cli_repro");
  for (const std::string family : {"svm-linear", "seq1"}) {
    std::vector<std::string> args{"crossval", "--manifest", m.string(), "--family", family, "--repeats", "1",
                                  "--epochs", "2", "--batch", "4", "--C-grid", "1", "--seed", "5"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", (dir / (family + "_a")).string()});
    b.insert(b.end(), {"--out", (dir / (family + "_b")).string()});
    const CliRun ra = cli(a), rb = cli(b);
    ASSERT_EQ(ra.code, 0) << ra.err;
    ASSERT_EQ(rb.code, 0) << rb.err;
    EXPECT_EQ(slurp(dir / (family + "_a") / "report.txt"), slurp(dir / (family + "_b") / "report.txt"));
    EXPECT_EQ(slurp(dir / (family + "_a") / "predictions.csv"), slurp(dir / (family + "_b") / "predictions.csv"));
    EXPECT_NE(ra.out.find("acc      sp       se       AUC"), std::string::npos);
    EXPECT_NE(ra.out.find("leakage audit: clean"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / (family + "_a") / "ensemble.sz3d"));
  }
}

TEST(Cli, TestCommandWarnsOnOverlapAndWritesVotes) {
  const fs::path m = easy_data("cli_test_data", 10, 4);
  const fs::path dir = scratch_dir("cli_test");
  ASSERT_EQ(cli({"crossval", "--manifest", m.string(), "--family", "svm-linear", "--C-grid", "1", "--out",
                 (dir / "cv").string()}).code,
            0);
  const fs::path model = dir / "cv" / "ensemble.sz3d";

  CliRun r = cli({"test", "--model", model.string(), "--manifest", m.string(), "--out", (dir / "t").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning: 20 of 20 test subjects were used to train"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("subjects: 20"), std::string::npos);
  const auto csv = lines(slurp(dir / "t" / "test.csv"));
  ASSERT_EQ(csv.size(), 21u);
  for (std::size_t i = 1; i < csv.size(); ++i) {
    std::istringstream row(csv[i]);
    std::string id, label, frac;
    std::getline(row, id, ',');
    std::getline(row, label, ',');
    std::getline(row, frac, ',');
    const double f = std::stod(frac) * 5;
    EXPECT_NEAR(f, std::round(f), 1e-12) << csv[i];
  }

  // two fresh subjects from another seed: disjoint ids, no warning, both right
  const fs::path fresh = easy_data("cli_test_fresh", 1, 90);
  r = cli({"test", "--model", model.string(), "--manifest", fresh.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.out.find("100.00%  100.00%  100.00%"), std::string::npos) << r.out;
}

TEST(Cli, PredictLinesAndShapeMismatch) {
  const fs::path m = easy_data("cli_pred_data", 10, 5);
  const fs::path dir = scratch_dir("cli_pred");
  ASSERT_EQ(cli({"crossval", "--manifest", m.string(), "--family", "seq1", "--repeats", "1", "--epochs", "1",
                 "--batch", "4", "--out", (dir / "cv").string()}).code,
            0);
  const fs::path ens = dir / "cv" / "ensemble.sz3d";
  const fs::path data = m.parent_path();

  CliRun r = cli({"predict", "--model", ens.string(), "--gm", (data / "s5_pat_000_gm.nii").string(), "--wm",
               (data / "s5_pat_000_wm.nii").string(), "--csf", (data / "s5_pat_000_csf.nii").string(), "--id", "p0"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = lines(r.out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].rfind("p0,", 0), 0u);
  const double frac = std::stod(out[0].substr(3));
  EXPECT_NEAR(frac * 5, std::round(frac * 5), 1e-12);

  // a single member, saved on its own, prints a probability
  const Ensemble e = load_ensemble(ens);
  save_classifier(dir / "one.sz3d", e.members[0]);
  r = cli({"predict", "--model", (dir / "one.sz3d").string(), "--manifest", m.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  out = lines(r.out);
  ASSERT_EQ(out.size(), 20u);
  for (const auto& l : out) {
    const auto a = l.find(','), b = l.rfind(',');
    const double p = std::stod(l.substr(a + 1, b - a - 1));
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    EXPECT_EQ(l.substr(b + 1), p >= 0.5 ? "1" : "0");
  }

  Volume small;
  small.dims = {8, 8, 8};
  small.voxels.assign(512, 0.5);
  write_nifti(dir / "small.nii", small);
  r = cli({"predict", "--model", ens.string(), "--gm", (dir / "small.nii").string(), "--wm",
           (dir / "small.nii").string(), "--csf", (dir / "small.nii").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("[1,8,8,8] does not match the model input [1,12,12,12]"), std::string::npos) << r.err;
}
