#include "sz3d/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sz3d/errors.hpp"
#include "sz3d/evaluation.hpp"
#include "sz3d/manifest.hpp"
#include "sz3d/model_io.hpp"
#include "sz3d/nifti.hpp"
#include "sz3d/report.hpp"
#include "sz3d/synth.hpp"
#include "text_format.hpp"

namespace sz3d {

namespace {

using json = nlohmann::json;

std::array<std::size_t, 3> parse_extents(const std::string& v, const std::string& key) {
  const Triple t = text::parse_triple(v, key);
  for (std::size_t e : t)
    if (e == 0) throw ConfigError(key + " must be positive, got '" + v + "'");
  return {t[0], t[1], t[2]};
}

OptimizerKind parse_optimizer(const std::string& v) {
  if (v == "adam") return OptimizerKind::Adam;
  if (v == "sgd") return OptimizerKind::SgdMomentum;
  throw ConfigError("optimizer must be 'adam' or 'sgd', got '" + v + "'");
}

ResampleMethod parse_resample(const std::string& v) {
  if (v == "trilinear") return ResampleMethod::Trilinear;
  if (v == "box2") return ResampleMethod::Box2;
  throw ConfigError("resample_method must be 'trilinear' or 'box2', got '" + v + "'");
}

template <typename T>
T json_get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

std::uint64_t json_uint(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError("config field '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

double json_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config field '" + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> json_numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("config field '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(json_number(x, key));
  return out;
}

// ------------------------------------------------------------------ data

Dataset load_dataset(const std::filesystem::path& manifest, const std::optional<std::array<std::size_t, 3>>& target,
                     ResampleMethod method) {
  Dataset data = load_manifest(manifest);
  if (target)
    for (Subject& s : data)
      for (Volume& v : s.maps)
        if (v.dims != *target) v = resample(v, *target, method);
  if (data.empty()) throw ConfigError("manifest '" + manifest.string() + "' lists no subjects");
  return data;
}

Triple common_extent(const Dataset& data) {
  const Triple e = data.front().map(MapKind::GM).tensor_extent();
  for (const Subject& s : data)
    if (s.map(MapKind::GM).tensor_extent() != e)
      throw ShapeError("subject '" + s.id + "' has extent " + triple_str(s.map(MapKind::GM).tensor_extent()) +
                       ", expected " + triple_str(e) + " like '" + data.front().id + "'");
  return e;
}

std::string model_name(const Classifier& c) {
  if (const auto* cnn = std::get_if<CnnClassifier>(&c))
    return cnn->model.arch ? family_name(CnnFamily{*cnn->model.arch, {}}) : "cnn";
  if (const auto* svm = std::get_if<SvmClassifier>(&c))
    return svm->svm.kernel.kind == KernelKind::Linear ? "svm-linear" : "svm-rbf";
  return "constant" + std::to_string(std::get<ConstantClassifier>(c).cls);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

// ------------------------------------------------------------------ commands

struct GenArgs {
  std::size_t n = 0;
  std::string extents = "16x16x16";
  double delta = 0.4;
  double sigma = 0.05;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t sites = 4;
  std::size_t sites_per_subject = 1;
  std::optional<std::size_t> jitter;
  std::optional<double> blob_width;
};

int cmd_gen_synth(const GenArgs& a, std::ostream& out) {
  SynthOptions o;
  o.n_per_class = a.n;
  o.extents = parse_extents(a.extents, "extents");
  o.delta = a.delta;
  o.sigma = a.sigma;
  o.seed = a.seed;
  o.sites = a.sites;
  o.sites_per_subject = a.sites_per_subject;
  o.jitter = a.jitter;
  o.blob_width = a.blob_width;
  o.validate();
  const auto manifest = synth_generate(o, a.out);
  out << manifest.string() << '\n';
  return 0;
}

int cmd_crossval(const RunConfig& c, std::ostream& out) {
  c.validate();
  const Dataset data = load_dataset(c.manifest, c.downsample, c.resample_method);
  const Triple extent = common_extent(data);
  const ModelFamily family = c.family_for(extent);
  if (const auto* cnn = std::get_if<CnnFamily>(&family)) cnn->arch.validate();

  const CvOptions options{c.outer_k, c.inner_k};
  const RepeatResult result = repeat_and_average(data, family, c.resolved_repeats(), c.seed, options);
  const std::string report = format_cv_report(result, {c.outer_k, c.inner_k, c.seed});

  make_dir(c.out);
  write_text(c.out / "report.txt", report);
  write_text(c.out / "folds.csv", cv_csv(result));
  write_text(c.out / "predictions.csv", predictions_csv(result.best_run, data));
  save_ensemble(c.out / "ensemble.sz3d", result.ensemble);
  out << report;
  out << "ensemble saved to " << (c.out / "ensemble.sz3d").string() << '\n';
  return 0;
}

struct TestArgs {
  std::string model;
  std::string manifest;
  std::string out;
  std::string downsample;
  std::string resample_method = "trilinear";
};

Ensemble as_ensemble(SavedPredictor p) {
  if (auto* e = std::get_if<Ensemble>(&p)) return std::move(*e);
  Ensemble e;
  e.members.push_back(std::move(std::get<Classifier>(p)));
  return e;
}

std::optional<std::array<std::size_t, 3>> optional_extents(const std::string& v) {
  if (v.empty()) return std::nullopt;
  return parse_extents(v, "downsample");
}

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  const auto target = optional_extents(a.downsample);
  const auto method = parse_resample(a.resample_method);
  const Ensemble ensemble = as_ensemble(load_predictor(a.model));
  const Dataset data = load_dataset(a.manifest, target, method);

  const std::set<std::string> trained(ensemble.training_ids.begin(), ensemble.training_ids.end());
  std::size_t seen = 0;
  for (const Subject& s : data) seen += trained.count(s.id);
  if (seen > 0)
    err << "warning: " << seen << " of " << data.size()
        << " test subjects were used to train this ensemble; results are not an independent test\n";

  const TestResult result = independent_test(ensemble, data);
  const std::string report = format_test_report(model_name(ensemble.members.front()), result);
  out << report;
  if (!a.out.empty()) {
    make_dir(a.out);
    write_text(std::filesystem::path(a.out) / "test_report.txt", report);
    write_text(std::filesystem::path(a.out) / "test.csv", test_csv(result));
  }
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string manifest;
  std::string gm, wm, csf;
  std::string id = "subject";
  std::string downsample;
  std::string resample_method = "trilinear";
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto target = optional_extents(a.downsample);
  const auto method = parse_resample(a.resample_method);
  Dataset data;
  if (!a.manifest.empty()) {
    if (!a.gm.empty() || !a.wm.empty() || !a.csf.empty())
      throw ConfigError("give either --manifest or --gm/--wm/--csf, not both");
    data = load_dataset(a.manifest, target, method);
  } else {
    if (a.gm.empty() || a.wm.empty() || a.csf.empty())
      throw ConfigError("predict needs --manifest or all of --gm, --wm and --csf");
    ManifestRow row{a.id, a.gm, a.wm, a.csf, 0, 0};
    Subject s = load_subject(row, {});
    if (target)
      for (Volume& v : s.maps) v = resample(v, *target, method);
    data.push_back(std::move(s));
  }
  std::vector<const Subject*> subjects;
  for (const Subject& s : data) subjects.push_back(&s);

  const SavedPredictor predictor = load_predictor(a.model);
  std::ostringstream lines;
  if (const auto* e = std::get_if<Ensemble>(&predictor)) {
    const auto votes = ensemble_vote_batch(*e, subjects);
    for (std::size_t i = 0; i < subjects.size(); ++i)
      lines << subjects[i]->id << ',' << text::format_double(votes[i].fraction) << ',' << votes[i].cls << '\n';
  } else {
    const Classifier& c = std::get<Classifier>(predictor);
    const auto scores = classifier_scores(c, subjects);
    for (std::size_t i = 0; i < subjects.size(); ++i)
      lines << subjects[i]->id << ',' << text::format_double(scores[i]) << ',' << decide(c, scores[i]) << '\n';
  }
  out << lines.str();
  return 0;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ------------------------------------------------------------------ RunConfig

bool is_cnn_family(const std::string& name) {
  const auto names = arch_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

void RunConfig::validate() const {
  if (manifest.empty()) throw ConfigError("manifest is required");
  if (out.empty()) throw ConfigError("out is required");
  if (!is_cnn_family(family) && family != "svm-linear" && family != "svm-rbf" && family != "constant")
    throw ConfigError("unknown family '" + family + "'");
  if (repeats && *repeats < 1) throw ConfigError("repeats must be at least 1");
  if (outer_k < 2) throw ConfigError("outer_k must be at least 2");
  if (inner_k < 2) throw ConfigError("inner_k must be at least 2");
  train.validate();
  for (double lr : learning_rates) {
    TrainConfig t = train;
    t.learning_rate = lr;
    t.validate();
  }
  if (seq_filters && seq_filters->empty()) throw ConfigError("seq_filters must not be empty");
  if (C_grid.empty()) throw ConfigError("C_grid must not be empty");
  for (double C : C_grid)
    if (!(C > 0.0)) throw ConfigError("C_grid values must be positive");
  if (family == "svm-rbf") {
    if (gamma_grid.empty()) throw ConfigError("gamma_grid must not be empty");
    for (double g : gamma_grid)
      if (!(g > 0.0)) throw ConfigError("gamma_grid values must be positive");
  }
  if (!(variance_target > 0.0 && variance_target <= 1.0)) throw ConfigError("variance_target must be in (0, 1]");
  if (constant_class != 0 && constant_class != 1) throw ConfigError("constant_class must be 0 or 1");
}

std::size_t RunConfig::resolved_repeats() const {
  if (repeats) return *repeats;
  return is_cnn_family(family) ? 10 : 1;
}

ModelFamily RunConfig::family_for(const Triple& input_extent) const {
  if (is_cnn_family(family)) {
    CnnFamily f;
    f.arch = named_arch(family);
    f.arch.multi_channel = multi_channel;
    f.arch.input_extent = input_extent;
    if (seq_filters) f.arch.seq_filters = *seq_filters;
    if (stem_filters) f.arch.stem_filters = *stem_filters;
    if (dense_units) f.arch.dense_units = *dense_units;
    f.configs.clear();
    if (learning_rates.empty()) {
      f.configs.push_back(train);
    } else {
      for (double lr : learning_rates) {
        TrainConfig t = train;
        t.learning_rate = lr;
        f.configs.push_back(t);
      }
    }
    return f;
  }
  if (family == "constant") return ConstantFamily{constant_class};
  SvmFamily f;
  f.kernel = family == "svm-linear" ? KernelKind::Linear : KernelKind::Rbf;
  f.C_grid = C_grid;
  f.gamma_grid = gamma_grid;
  f.variance_target = variance_target;
  return f;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> fields{
      {"manifest", [&](const json& v, const std::string& k) { c.manifest = json_get<std::string>(v, k); }},
      {"out", [&](const json& v, const std::string& k) { c.out = json_get<std::string>(v, k); }},
      {"family", [&](const json& v, const std::string& k) { c.family = json_get<std::string>(v, k); }},
      {"multi_channel", [&](const json& v, const std::string& k) { c.multi_channel = json_get<bool>(v, k); }},
      {"repeats", [&](const json& v, const std::string& k) { c.repeats = json_uint(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { c.seed = json_uint(v, k); }},
      {"outer_k", [&](const json& v, const std::string& k) { c.outer_k = json_uint(v, k); }},
      {"inner_k", [&](const json& v, const std::string& k) { c.inner_k = json_uint(v, k); }},
      {"learning_rate", [&](const json& v, const std::string& k) { c.train.learning_rate = json_number(v, k); }},
      {"learning_rates", [&](const json& v, const std::string& k) { c.learning_rates = json_numbers(v, k); }},
      {"batch_size", [&](const json& v, const std::string& k) { c.train.batch_size = json_uint(v, k); }},
      {"epochs", [&](const json& v, const std::string& k) { c.train.epochs = json_uint(v, k); }},
      {"optimizer", [&](const json& v, const std::string& k) { c.train.optimizer = parse_optimizer(json_get<std::string>(v, k)); }},
      {"momentum", [&](const json& v, const std::string& k) { c.train.momentum = json_number(v, k); }},
      {"beta1", [&](const json& v, const std::string& k) { c.train.beta1 = json_number(v, k); }},
      {"beta2", [&](const json& v, const std::string& k) { c.train.beta2 = json_number(v, k); }},
      {"epsilon", [&](const json& v, const std::string& k) { c.train.epsilon = json_number(v, k); }},
      {"train_seed", [&](const json& v, const std::string& k) { c.train.seed = json_uint(v, k); }},
      {"seq_filters", [&](const json& v, const std::string& k) {
         std::vector<std::size_t> f;
         if (!v.is_array()) throw ConfigError("config field '" + k + "' must be an array");
         for (const auto& x : v) f.push_back(json_uint(x, k));
         c.seq_filters = f;
       }},
      {"stem_filters", [&](const json& v, const std::string& k) { c.stem_filters = json_uint(v, k); }},
      {"dense_units", [&](const json& v, const std::string& k) { c.dense_units = json_uint(v, k); }},
      {"C_grid", [&](const json& v, const std::string& k) { c.C_grid = json_numbers(v, k); }},
      {"gamma_grid", [&](const json& v, const std::string& k) { c.gamma_grid = json_numbers(v, k); }},
      {"variance_target", [&](const json& v, const std::string& k) { c.variance_target = json_number(v, k); }},
      {"constant_class", [&](const json& v, const std::string& k) { c.constant_class = static_cast<int>(json_uint(v, k)); }},
      {"downsample", [&](const json& v, const std::string& k) { c.downsample = parse_extents(json_get<std::string>(v, k), k); }},
      {"resample_method", [&](const json& v, const std::string& k) { c.resample_method = parse_resample(json_get<std::string>(v, k)); }},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(value, key);
  }
  return c;
}

// ------------------------------------------------------------------ entry point

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"3D CNN and PCA+SVM classification of tissue probability maps", "sz3d"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-synth", "Write a synthetic phantom dataset and its manifest");
  g->add_option("--n", gen.n, "Subjects per class")->required();
  g->add_option("--extents", gen.extents, "Volume extents XxYxZ");
  g->add_option("--delta", gen.delta, "Lesion depth");
  g->add_option("--sigma", gen.sigma, "Voxel noise standard deviation");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--sites", gen.sites, "Number of fixed lesion sites");
  g->add_option("--sites-per-subject", gen.sites_per_subject, "Lesions per patient");
  g->add_option("--jitter", gen.jitter, "Maximum lesion shift in voxels per axis");
  g->add_option("--blob-width", gen.blob_width, "Lesion Gaussian sd in voxels");

  std::string config_path, family, manifest, out_dir, optimizer, downsample, resample_method;
  std::optional<std::size_t> repeats, outer_k, inner_k, epochs, batch;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, variance;
  std::optional<int> constant_class;
  std::vector<double> lrs, C_grid, gamma_grid;
  bool multi = false;
  auto* cv = app.add_subcommand("crossval", "Nested cross-validation with repeats and an ensemble");
  cv->add_option("--config", config_path, "JSON run config");
  cv->add_option("--manifest", manifest, "Dataset manifest CSV");
  cv->add_option("--family", family, "seq1..seq3, inception1, inception2, inception_resnet1, inception_resnet2, svm-linear, svm-rbf, constant");
  auto* multi_flag = cv->add_flag("--multi-channel", multi, "Use GM, WM and CSF as three input branches");
  cv->add_option("--repeats", repeats, "Repeats of the outer cross-validation");
  cv->add_option("--seed", seed, "Base seed");
  cv->add_option("--outer-k", outer_k, "Outer folds");
  cv->add_option("--inner-k", inner_k, "Inner folds");
  cv->add_option("--epochs", epochs, "Training epochs");
  cv->add_option("--lr", lr, "Learning rate");
  cv->add_option("--lrs", lrs, "Learning-rate grid for inner selection");
  cv->add_option("--batch", batch, "Batch size");
  cv->add_option("--optimizer", optimizer, "adam or sgd");
  cv->add_option("--C-grid", C_grid, "SVM C grid");
  cv->add_option("--gamma-grid", gamma_grid, "RBF gamma grid");
  cv->add_option("--variance", variance, "PCA explained-variance target");
  cv->add_option("--constant-class", constant_class, "Class predicted by the constant family");
  cv->add_option("--downsample", downsample, "Resample volumes to XxYxZ on load");
  cv->add_option("--resample-method", resample_method, "trilinear or box2");
  cv->add_option("--out", out_dir, "Output directory");

  TestArgs test;
  auto* t = app.add_subcommand("test", "Evaluate a saved ensemble on an independent dataset");
  t->add_option("--model", test.model, "Saved ensemble")->required();
  t->add_option("--manifest", test.manifest, "Test manifest CSV")->required();
  t->add_option("--out", test.out, "Directory for the report and per-subject CSV");
  t->add_option("--downsample", test.downsample, "Resample volumes to XxYxZ on load");
  t->add_option("--resample-method", test.resample_method, "trilinear or box2");

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Predict subjects with a saved model or ensemble");
  p->add_option("--model", pred.model, "Saved model or ensemble")->required();
  p->add_option("--manifest", pred.manifest, "Manifest of subjects");
  p->add_option("--gm", pred.gm, "GM map");
  p->add_option("--wm", pred.wm, "WM map");
  p->add_option("--csf", pred.csf, "CSF map");
  p->add_option("--id", pred.id, "Subject id for --gm/--wm/--csf");
  p->add_option("--downsample", pred.downsample, "Resample volumes to XxYxZ on load");
  p->add_option("--resample-method", pred.resample_method, "trilinear or box2");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) return cmd_gen_synth(gen, out);
    if (cv->parsed()) {
      RunConfig c = config_path.empty() ? RunConfig{} : parse_run_config(read_text(config_path));
      if (!manifest.empty()) c.manifest = manifest;
      if (!out_dir.empty()) c.out = out_dir;
      if (!family.empty()) c.family = family;
      if (multi_flag->count() > 0) c.multi_channel = multi;
      if (repeats) c.repeats = *repeats;
      if (seed) c.seed = *seed;
      if (outer_k) c.outer_k = *outer_k;
      if (inner_k) c.inner_k = *inner_k;
      if (epochs) c.train.epochs = *epochs;
      if (lr) c.train.learning_rate = *lr;
      if (!lrs.empty()) c.learning_rates = lrs;
      if (batch) c.train.batch_size = *batch;
      if (!optimizer.empty()) c.train.optimizer = parse_optimizer(optimizer);
      if (!C_grid.empty()) c.C_grid = C_grid;
      if (!gamma_grid.empty()) c.gamma_grid = gamma_grid;
      if (variance) c.variance_target = *variance;
      if (constant_class) c.constant_class = *constant_class;
      if (!downsample.empty()) c.downsample = parse_extents(downsample, "downsample");
      if (!resample_method.empty()) c.resample_method = parse_resample(resample_method);
      return cmd_crossval(c, out);
    }
    if (t->parsed()) return cmd_test(test, out, err);
    if (p->parsed()) return cmd_predict(pred, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sz3d
