// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sz3d/architectures.hpp"
#include "sz3d/blocks.hpp"
#include "sz3d/cli.hpp"
#include "sz3d/errors.hpp"
#include "sz3d/evaluation.hpp"
#include "sz3d/folds.hpp"
#include "sz3d/manifest.hpp"
#include "sz3d/metrics.hpp"
#include "sz3d/model_io.hpp"
#include "sz3d/pca.hpp"
#include "sz3d/svm.hpp"
#include "sz3d/synth.hpp"
#include "test_support.hpp"

using namespace sz3d;
using namespace sz3d::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      if (pass) detail = why;
      pass = false;
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  std::fprintf(stderr, "  $ sz3d");
  for (const auto& a : args) std::fprintf(stderr, " %s", a.c_str());
  std::fprintf(stderr, "\n");
  const auto t0 = Clock::now();
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  std::fprintf(stderr, "    exit %d after %.1fs\n", r.code, seconds_since(t0));
  if (r.code != 0) std::fprintf(stderr, "%s", r.err.c_str());
  return r;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

// Mean outer-fold accuracy from the final "Model" row of a crossval report.
double report_accuracy(const std::string& report, const std::string& family) {
  const auto at = report.find("\n" + family + " ");
  if (at == std::string::npos) return -1.0;
  std::istringstream row(report.substr(at + 1 + family.size()));
  std::string acc;
  row >> acc;
  return std::stod(acc) / 100.0;
}

bool leakage_clean(const std::string& report) {
  return report.find("leakage audit: clean") != std::string::npos;
}

// Every crossval report produced during the run, for the leakage audit of criterion 6.
std::vector<std::string> g_reports;

// ------------------------------------------------------------------ 2

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  constexpr double kTol = 1e-5;
  constexpr std::uint64_t kSeeds = 20;
  double worst = 0;
  std::size_t checks = 0;
  auto record = [&](const GradCheck& gc, const std::string& what, std::uint64_t seed) {
    worst = std::max(worst, gc.max_rel);
    checks += gc.checked;
    o.require(gc.max_rel < kTol, what + " seed " + std::to_string(seed) + ": " + gc.worst);
  };

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(derive_seed(7001, seed));
    {
      Conv3D c(2, 3, ConvSpec{{3, 2, 3}, {1, 2, 1}, {1, 0, 1}});
      randomize_parameters(c.parameters(), rng, 0.4);
      record(check_layer_gradients(c, random_tensor({2, 2, 4, 5, 4}, rng), rng), "conv3d", seed);
    }
    {
      MaxPool3D p(PoolSpec{{3, 3, 3}, {1, 1, 1}, {1, 1, 1}});
      record(check_layer_gradients(p, random_tensor({2, 2, 3, 4, 3}, rng), rng), "maxpool3d", seed);
    }
    {
      ReLU r;
      record(check_layer_gradients(r, random_tensor({2, 30}, rng), rng), "relu", seed);
    }
    {
      Sigmoid s;
      record(check_layer_gradients(s, random_tensor({2, 10}, rng, -4, 4), rng), "sigmoid", seed);
    }
    {
      Flatten f;
      record(check_layer_gradients(f, random_tensor({2, 2, 2, 3, 2}, rng), rng), "flatten", seed);
    }
    {
      GlobalAvgPool g;
      record(check_layer_gradients(g, random_tensor({2, 3, 3, 2, 4}, rng), rng), "global-avg-pool", seed);
    }
    {
      Dense d(12, 5);
      randomize_parameters(d.parameters(), rng, 0.4);
      record(check_layer_gradients(d, random_tensor({3, 12}, rng), rng), "dense", seed);
    }
    {
      InceptionBlock b = make_inception_block(2, InceptionWidths{2, 2, 3, 1, 2, 2});
      randomize_parameters(b.parameters(), rng, 0.4);
      record(check_layer_gradients(b, random_tensor({1, 2, 6, 6, 6}, rng), rng, 40), "inception block", seed);
    }
    {
      InceptionResnetBlock b = make_inception_resnet_block(2, InceptionWidths{2, 2, 3, 1, 2, 2});
      randomize_parameters(b.parameters(), rng, 0.4);
      record(check_layer_gradients(b, random_tensor({1, 2, 6, 6, 6}, rng), rng, 40), "inception-residual block",
             seed);
    }
    {
      std::vector<Sequential> branches;
      for (int k = 0; k < 3; ++k) {
        std::vector<LayerPtr> layers;
        layers.push_back(std::make_unique<Conv3D>(1, 2, ConvSpec{}));
        layers.push_back(std::make_unique<ReLU>());
        layers.push_back(std::make_unique<MaxPool3D>(PoolSpec{}));
        branches.emplace_back(std::move(layers));
      }
      ChannelBranches cb(std::move(branches), 1);
      randomize_parameters(cb.parameters(), rng, 0.4);
      record(check_layer_gradients(cb, random_tensor({2, 3, 4, 4, 4}, rng), rng, 40), "channel branches", seed);
    }
  }

  for (const auto& name : arch_names())
    for (bool multi : {false, true})
      for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        Rng rng(derive_seed(7002 + multi, seed));
        ArchSpec spec = named_arch(name);
        spec.input_extent = {12, 12, 12};
        spec.multi_channel = multi;
        Network net = build_network(spec, seed);
        randomize_biases(net.parameters(), rng, 0.1);
        const Tensor x = random_tensor({1, spec.input_channels(), 12, 12, 12}, rng, 0, 1);
        record(check_network_gradients(net, x, rng, 4, 4), name + (multi ? "-multi" : ""), seed);
      }

  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt("%.0f", secs) + "s exceeds 5 minutes");
  if (o.pass)
    o.detail = "7 layer kinds, 3 blocks, 14 architectures x " + std::to_string(kSeeds) + " seeds; " +
               std::to_string(checks) + " derivatives, max rel error " + fmt("%.2e", worst) + " < 1e-5; " +
               fmt("%.0f", secs) + "s";
  return o;
}

// ------------------------------------------------------------------ 3

Outcome criterion3() {
  Outcome o;
  Rng rng(7003);
  double conv_worst = 0;
  constexpr int kConfigs = 150;
  for (int trial = 0; trial < kConfigs; ++trial) {
    ConvSpec s;
    for (int a = 0; a < 3; ++a) {
      s.kernel[a] = 1 + rng.below(3);
      s.stride[a] = 1 + rng.below(2);
      s.padding[a] = rng.below(s.kernel[a]);
    }
    const std::size_t C = 1 + rng.below(3), O = 1 + rng.below(3);
    Shape in{C, 0, 0, 0};
    for (int a = 0; a < 3; ++a) in[a + 1] = s.kernel[a] + rng.below(5);
    const Tensor x = random_tensor(in, rng), w = random_tensor({O, C, s.kernel[0], s.kernel[1], s.kernel[2]}, rng),
                 b = random_tensor({O}, rng);
    const Tensor y = kernels::conv3d_forward(x, w, b, s), ref = conv_oracle(x, w, b, s);
    o.require(y.shape() == ref.shape(), "conv shape differs at config " + std::to_string(trial));
    if (y.shape() != ref.shape()) continue;
    for (std::size_t i = 0; i < y.size(); ++i) conv_worst = std::max(conv_worst, std::abs(y[i] - ref[i]));
  }
  o.require(conv_worst < 1e-12, "conv differs from oracle by " + fmt("%.2e", conv_worst));

  int pool_exact = 0;
  for (int trial = 0; trial < kConfigs; ++trial) {
    PoolSpec s;
    for (int a = 0; a < 3; ++a) {
      s.window[a] = 1 + rng.below(3);
      s.stride[a] = 1 + rng.below(3);
      s.padding[a] = rng.below((s.window[a] + 1) / 2);
    }
    Shape in{1 + rng.below(2), 0, 0, 0};
    for (int a = 0; a < 3; ++a) in[a + 1] = s.window[a] + rng.below(4);
    Tensor x = random_tensor(in, rng);
    if (trial % 2 == 0)
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::floor(3 * x[i]);
    const auto [y, map] = kernels::maxpool3d_forward(x, s);
    const PoolOracle ref = pool_oracle(x, s);
    pool_exact += y == ref.output && map.argmax == ref.argmax;
  }
  o.require(pool_exact == kConfigs, std::to_string(kConfigs - pool_exact) + " pooling configs differ from oracle");

  int auc_exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform() < 0.5;
      s[i] = trial % 2 ? rng.uniform() : double(rng.below(5)) / 4.0;
    }
    y[0] = 0;
    y[1] = 1;
    auc_exact += roc_auc(s, y) == auc_pairs_oracle(s, y);
  }
  o.require(auc_exact == 200, std::to_string(200 - auc_exact) + " AUC instances differ from the pair oracle");
  if (o.pass)
    o.detail = std::to_string(kConfigs) + " conv configs (max diff " + fmt("%.1e", conv_worst) + "), " +
               std::to_string(kConfigs) + " pooling configs exact, 200 AUC instances exact";
  return o;
}

// ------------------------------------------------------------------ 4

Outcome criterion4() {
  Outcome o;
  {
    Eigen::MatrixXd x(2, 1);
    x << -1, 1;
    const std::vector<int> y{-1, 1};
    const SvmModel m = svm_fit(x, y, SvmKernel::linear(), 1e6);
    const double w = m.dual_coef.dot(m.support_vectors.col(0));
    o.require(std::abs(m.alpha(0) - 0.5) < 1e-6 && std::abs(m.alpha(1) - 0.5) < 1e-6, "two-point alpha != 0.5");
    o.require(std::abs(m.bias) < 1e-6, "two-point bias != 0");
    o.require(std::abs(2.0 / std::abs(w) - 2.0) < 1e-6, "two-point margin != 2");
  }
  {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<int> y{-1, -1, 1, 1};
    auto accuracy = [&](const SvmModel& m) {
      int ok = 0;
      for (int i = 0; i < 4; ++i) ok += svm_predict(m, x.row(i).transpose()) == y[i];
      return ok / 4.0;
    };
    o.require(accuracy(svm_fit(x, y, SvmKernel::rbf(1.0), 1e3)) == 1.0, "RBF does not solve XOR");
    for (double C : {0.01, 1.0, 100.0, 1e4})
      o.require(accuracy(svm_fit(x, y, SvmKernel::linear(), C)) <= 0.75, "linear SVM exceeds 0.75 on XOR");
  }
  Rng rng(7004);
  double worst_kkt = 0, worst_balance = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 20 + trial % 15, d = 2 + trial % 4;
    Eigen::MatrixXd x(n, d);
    std::vector<int> y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y[i] = i % 2 ? 1 : -1;
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
      x(i, 0) += (0.5 + 0.05 * trial) * y[i];
    }
    const double C = trial % 3 == 0 ? 0.1 : (trial % 3 == 1 ? 1.0 : 10.0);
    const SvmModel m = svm_fit(x, y, trial % 2 ? SvmKernel::rbf(0.3) : SvmKernel::linear(), C);
    double balance = 0;
    for (Eigen::Index i = 0; i < n; ++i) balance += m.alpha(i) * y[i];
    worst_kkt = std::max(worst_kkt, m.kkt_residual);
    worst_balance = std::max(worst_balance, std::abs(balance));
  }
  o.require(worst_kkt < 1e-3, "KKT residual " + fmt("%.2e", worst_kkt));
  o.require(worst_balance < 1e-6, "sum alpha*y " + fmt("%.2e", worst_balance));
  if (o.pass)
    o.detail = "two-point closed form, XOR (RBF 1.0, linear <= 0.75), 50 datasets: max KKT " + fmt("%.1e", worst_kkt) +
               ", max |sum alpha*y| " + fmt("%.1e", worst_balance);
  return o;
}

// ------------------------------------------------------------------ 5

Outcome criterion5() {
  Outcome o;
  Rng rng(7005);
  double ortho = 0, routes = 0, recon = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd x(20, 6);
    for (Eigen::Index i = 0; i < 20; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) x(i, j) = rng.normal() * (1 + j);
    const PcaModel g = pca_fit(x, 1.0, PcaRoute::Gram);
    const PcaModel c = pca_fit(x, 1.0, PcaRoute::Covariance);
    for (const PcaModel* m : {&g, &c}) {
      const Eigen::MatrixXd gram = m->components * m->components.transpose();
      ortho = std::max(ortho, (gram - Eigen::MatrixXd::Identity(m->k(), m->k())).cwiseAbs().maxCoeff());
      for (Eigen::Index i = 0; i < 20; ++i) {
        const Eigen::VectorXd xi = x.row(i).transpose();
        recon = std::max(recon, (xi - pca_reconstruct(*m, pca_transform(*m, xi))).norm());
      }
    }
    if (g.k() != c.k()) {
      o.require(false, "routes keep different k");
      continue;
    }
    routes = std::max(routes, (g.eigenvalues - c.eigenvalues).cwiseAbs().maxCoeff());
    for (Eigen::Index r = 0; r < g.k(); ++r) {
      const double sign = g.components.row(r).dot(c.components.row(r)) < 0 ? -1.0 : 1.0;
      routes = std::max(routes, (g.components.row(r) - sign * c.components.row(r)).cwiseAbs().maxCoeff());
    }
  }
  o.require(ortho < 1e-8, "orthonormality error " + fmt("%.2e", ortho));
  o.require(routes < 1e-8, "Gram and covariance routes differ by " + fmt("%.2e", routes));
  o.require(recon < 1e-8, "reconstruction error " + fmt("%.2e", recon));
  if (o.pass)
    o.detail = "50 instances of 20x6: orthonormality " + fmt("%.1e", ortho) + ", Gram vs covariance " +
               fmt("%.1e", routes) + ", reconstruction " + fmt("%.1e", recon);
  return o;
}

// ------------------------------------------------------------------ 6

Outcome criterion6(const fs::path& work) {
  Outcome o;
  Rng rng(7006);
  int fold_cases = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    const std::size_t n = 2 * k + rng.below(100);
    std::vector<int> y(n);
    for (auto& v : y) v = rng.uniform() < 0.3 + 0.4 * rng.uniform();
    for (std::size_t i = 0; i < k; ++i) {
      y[i] = 1;
      y[n - 1 - i] = 0;
    }
    const FoldPlan plan = stratified_kfold(y, k, rng.next_u64());
    const double pos = std::count(y.begin(), y.end(), 1);
    std::vector<int> seen(n, 0);
    bool ok = plan.folds.size() == k;
    for (const auto& f : plan.folds) {
      double fpos = 0;
      for (std::size_t i : f) {
        ok = ok && i < n;
        if (i < n) ++seen[i];
        fpos += y[i];
      }
      ok = ok && std::abs(fpos - pos * f.size() / n) <= 1.0 + 1e-9;
      ok = ok && std::abs(double(f.size()) - double(n) / k) <= 1.0 + 1e-9;
    }
    ok = ok && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
    fold_cases += ok;
  }
  o.require(fold_cases == 500, std::to_string(500 - fold_cases) + " of 500 fold plans break a partition law");

  // direct audit on a fitted family
  SynthOptions so;
  so.n_per_class = 15;
  so.seed = 61;
  Dataset data;
  for (std::size_t i = 0; i < 30; ++i) data.push_back(synth_subject(so, i));
  SvmFamily fam;
  fam.C_grid = {0.1, 1.0, 10.0};
  const CvResult run = nested_cv(data, fam, 9);
  o.require(leakage_free(run), "access log shows outer-test reads during fitting");

  // 10 repeats: the reported best repeat is the argmax recomputed from folds.csv
  const fs::path data_dir = work / "c6_data";
  cli({"gen-synth", "--n", "30", "--extents", "16x16x16", "--delta", "0.2", "--seed", "606", "--out",
       data_dir.string()});
  const CliResult r = cli({"crossval", "--manifest", (data_dir / "manifest.csv").string(), "--family", "svm-linear",
                           "--repeats", "10", "--seed", "17", "--out", (work / "c6_cv").string()});
  o.require(r.code == 0, "10-repeat crossval failed: " + r.err);
  std::size_t independent = 0, reported = 999;
  if (r.code == 0) {
    g_reports.push_back(r.out);
    std::map<std::size_t, std::vector<double>> acc;
    for (const auto& row : read_csv(work / "c6_cv" / "folds.csv")) acc[std::stoul(row[0])].push_back(std::stod(row[2]));
    o.require(acc.size() == 10, "folds.csv does not hold 10 repeats");
    double best = -1;
    for (const auto& [rep, folds] : acc) {
      double s = 0;
      for (double a : folds) s += a;
      s /= folds.size();
      if (s > best + 1e-12) {
        best = s;
        independent = rep;
      }
    }
    const auto at = r.out.find("best repeat: ");
    if (at != std::string::npos) reported = std::stoul(r.out.substr(at + 13));
    o.require(reported == independent, "reported best repeat " + std::to_string(reported) + ", argmax is " +
                                           std::to_string(independent));
  }

  int clean = 0;
  for (const auto& rep : g_reports) clean += leakage_clean(rep);
  o.require(clean == int(g_reports.size()), std::to_string(g_reports.size() - clean) + " crossval runs leaked");
  if (o.pass)
    o.detail = "500 fold plans lawful; leakage audit clean in " + std::to_string(g_reports.size() + 1) +
               " nested runs; best repeat " + std::to_string(reported) + " equals recomputed argmax";
  return o;
}

// ------------------------------------------------------------------ 7 and 8

struct SurrogateRun {
  std::string family;   // name as printed in the report
  std::vector<std::string> args;
  double threshold;
};

const std::vector<SurrogateRun>& surrogate_runs() {
  static const std::vector<SurrogateRun> runs{
      {"seq1", {"--family", "seq1", "--epochs", "20", "--lr", "1e-3", "--repeats", "2"}, 0.90},
      {"inception_resnet1-multi",
       {"--family", "inception_resnet1", "--multi-channel", "--epochs", "8", "--lr", "3e-3", "--repeats", "2"},
       0.90},
      {"svm-linear", {"--family", "svm-linear", "--repeats", "2"}, 0.75},
  };
  return runs;
}

std::vector<std::string> crossval_args(const SurrogateRun& run, const fs::path& manifest, const fs::path& out) {
  std::vector<std::string> a{"crossval", "--manifest", manifest.string(), "--seed", "2024"};
  a.insert(a.end(), run.args.begin(), run.args.end());
  a.insert(a.end(), {"--out", out.string()});
  return a;
}

Outcome criterion7(const fs::path& work, std::map<std::string, double>& accuracy) {
  Outcome o;
  const auto t0 = Clock::now();
  const fs::path data = work / "c7_data";
  const CliResult g = cli({"gen-synth", "--n", "100", "--extents", "16x16x16", "--delta", "0.4", "--sigma", "0.05",
                           "--seed", "2024", "--out", data.string()});
  o.require(g.code == 0, "gen-synth failed: " + g.err);
  if (g.code != 0) return o;
  for (const SurrogateRun& run : surrogate_runs()) {
    const CliResult r = cli(crossval_args(run, data / "manifest.csv", work / ("c7_" + run.family)));
    o.require(r.code == 0, run.family + " crossval failed: " + r.err);
    if (r.code != 0) continue;
    g_reports.push_back(r.out);
    const double acc = report_accuracy(r.out, run.family);
    accuracy[run.family] = acc;
    o.require(acc >= run.threshold, run.family + " accuracy " + fmt("%.4f", acc) + " below " + fmt("%.2f", run.threshold));
  }
  const double svm = accuracy["svm-linear"];
  for (const char* cnn : {"seq1", "inception_resnet1-multi"})
    o.require(accuracy[cnn] > svm, std::string(cnn) + " does not beat the linear SVM");
  const double secs = seconds_since(t0);
  o.require(secs < 1800.0, "runtime " + fmt("%.0f", secs) + "s exceeds 30 minutes");
  if (o.pass)
    o.detail = "Seq_1 " + fmt("%.4f", accuracy["seq1"]) + ", Inception_Resnet_1 multi " +
               fmt("%.4f", accuracy["inception_resnet1-multi"]) + " (>= 0.90), linear SVM " + fmt("%.4f", svm) +
               " (>= 0.75); " + fmt("%.0f", secs) + "s";
  return o;
}

Outcome criterion8(const fs::path& work) {
  Outcome o;
  const fs::path data = work / "c7_data";
  const fs::path again = work / "c8_data";
  cli({"gen-synth", "--n", "100", "--extents", "16x16x16", "--delta", "0.4", "--sigma", "0.05", "--seed", "2024",
       "--out", again.string()});
  o.require(slurp(data / "manifest.csv") == slurp(again / "manifest.csv"), "regenerated manifest differs");
  for (const ManifestRow& row : read_manifest(data / "manifest.csv"))
    o.require(slurp(data / row.gm) == slurp(again / row.gm), "regenerated " + row.gm.string() + " differs");

  std::size_t replayed = 0;
  const Dataset subjects = load_manifest(data / "manifest.csv");
  for (const SurrogateRun& run : surrogate_runs()) {
    const fs::path first = work / ("c7_" + run.family), second = work / ("c8_" + run.family);
    const CliResult r = cli(crossval_args(run, data / "manifest.csv", second));
    o.require(r.code == 0, run.family + " rerun failed: " + r.err);
    if (r.code != 0) continue;
    g_reports.push_back(r.out);
    for (const char* file : {"report.txt", "folds.csv", "predictions.csv"})
      o.require(!slurp(first / file).empty() && slurp(first / file) == slurp(second / file),
                run.family + " " + file + " differs between runs");

    // a fresh load of the saved ensemble reproduces the recorded held-out scores
    const Ensemble ens = load_ensemble(first / "ensemble.sz3d");
    for (const auto& row : read_csv(first / "predictions.csv")) {
      const std::size_t index = std::stoul(row[0]), fold = std::stoul(row[2]);
      const Subject* s[] = {&subjects.at(index)};
      const double score = classifier_scores(ens.members.at(fold), s)[0];
      o.require(score == std::stod(row[4]), run.family + " reloaded fold " + std::to_string(fold) +
                                                " model scores subject " + row[1] + " differently");
      ++replayed;
    }
  }
  if (o.pass)
    o.detail = "synthetic files, reports, fold and prediction CSVs bit-identical on rerun; " +
               std::to_string(replayed) + " recorded predictions reproduced exactly after reload";
  return o;
}

// ------------------------------------------------------------------ 9

Outcome criterion9(const fs::path& work) {
  Outcome o;
  const fs::path data = work / "c9_data";
  cli({"gen-synth", "--n", "100", "--extents", "16x16x16", "--delta", "0", "--sigma", "0.05", "--seed", "909",
       "--out", data.string()});
  std::vector<std::pair<std::string, std::vector<std::string>>> families;
  for (const auto& name : arch_names())
    families.push_back({name, {"--family", name, "--epochs", "3", "--lr", "1e-3"}});
  families.push_back({"seq1-multi", {"--family", "seq1", "--multi-channel", "--epochs", "3", "--lr", "1e-3"}});
  families.push_back({"inception_resnet1-multi",
                      {"--family", "inception_resnet1", "--multi-channel", "--epochs", "3", "--lr", "3e-3"}});
  families.push_back({"svm-linear", {"--family", "svm-linear"}});
  families.push_back({"svm-rbf", {"--family", "svm-rbf"}});

  std::string summary;
  for (const auto& [name, extra] : families) {
    std::vector<std::string> a{"crossval", "--manifest", (data / "manifest.csv").string(), "--seed", "909",
                               "--repeats", "1"};
    a.insert(a.end(), extra.begin(), extra.end());
    a.insert(a.end(), {"--out", (work / ("c9_" + name)).string()});
    const CliResult r = cli(a);
    o.require(r.code == 0, name + " failed: " + r.err);
    if (r.code != 0) continue;
    g_reports.push_back(r.out);
    const double acc = report_accuracy(r.out, name);
    o.require(acc >= 0.40 && acc <= 0.60, name + " accuracy " + fmt("%.4f", acc) + " outside [0.40, 0.60]");
    summary += (summary.empty() ? "" : ", ") + name + " " + fmt("%.3f", acc);
  }
  if (o.pass) o.detail = "delta=0, mean CV accuracy in [0.40, 0.60]: " + summary;
  else o.detail += " (" + summary + ")";
  return o;
}

}  // namespace

// With arguments, runs only the listed criteria (8 reuses the output of 7).
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const fs::path work = fs::temp_directory_path() / "sz3d_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  std::map<int, Outcome> results;
  std::map<std::string, double> accuracy;
  auto run = [&](int id, auto&& body) {
    if (!only.empty() && !only.count(id)) return;
    std::fprintf(stderr, "criterion %d ...\n", id);
    try {
      results[id] = body();
    } catch (const std::exception& e) {
      results[id] = Outcome{false, std::string("exception: ") + e.what()};
    }
  };
  run(2, criterion2);
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(7, [&] { return criterion7(work, accuracy); });
  run(8, [&] { return criterion8(work); });
  run(9, [&] { return criterion9(work); });
  run(6, [&] { return criterion6(work); });  // last, so it audits every crossval above

  if (only.empty() || only.count(1)) {
    Outcome first;
    for (int id = 2; id <= 9; ++id)
      first.require(results.count(id) && results[id].pass, "criterion " + std::to_string(id) + " failed");
    if (first.pass)
      first.detail = "clinical figures (79.27% CV, 70.98% independent test) kept as reference only; "
                     "criteria 2-9 all pass on synthetic surrogates";
    results[1] = first;
  }

  bool all = true;
  for (const auto& [id, r] : results) {
    std::printf("%s criterion %d: %s\n", r.pass ? "PASS" : "FAIL", id, r.detail.c_str());
    all = all && r.pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
