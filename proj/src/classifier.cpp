#include "sz3d/classifier.hpp"

#include <algorithm>
#include <set>

#include "sz3d/errors.hpp"
#include "sz3d/folds.hpp"
#include "sz3d/grid_search.hpp"
#include "sz3d/rng.hpp"
#include "text_format.hpp"

namespace sz3d {

std::string_view to_string(AccessPhase phase) {
  switch (phase) {
    case AccessPhase::Fit: return "fit";
    case AccessPhase::Select: return "select";
    case AccessPhase::Evaluate: return "evaluate";
  }
  return "?";
}

std::vector<std::size_t> AccessLog::touched(std::size_t fold, AccessPhase phase) const {
  std::set<std::size_t> out;
  for (const auto& e : entries_)
    if (e.fold == fold && e.phase == phase) out.insert(e.index);
  return {out.begin(), out.end()};
}

DatasetView::DatasetView(const Dataset& data, std::vector<std::size_t> indices, AccessLog* log,
                         std::size_t fold, AccessPhase phase)
    : data_(&data), indices_(std::move(indices)), log_(log), fold_(fold), phase_(phase) {
  for (std::size_t i : indices_)
    if (i >= data.size()) throw ShapeError("dataset view index " + std::to_string(i) + " out of range");
}

const Subject& DatasetView::operator[](std::size_t j) const {
  const std::size_t g = indices_.at(j);
  if (log_) log_->record(fold_, phase_, g);
  return (*data_)[g];
}

std::vector<int> DatasetView::labels_unaudited() const {
  std::vector<int> out;
  out.reserve(indices_.size());
  for (std::size_t g : indices_) out.push_back((*data_)[g].label);
  return out;
}

DatasetView DatasetView::subset(std::span<const std::size_t> local) const {
  std::vector<std::size_t> idx;
  idx.reserve(local.size());
  for (std::size_t j : local) idx.push_back(indices_.at(j));
  return DatasetView(*data_, std::move(idx), log_, fold_, phase_);
}

DatasetView DatasetView::with_phase(AccessPhase phase) const {
  return DatasetView(*data_, indices_, log_, fold_, phase);
}

std::string family_name(const ModelFamily& family) {
  if (const auto* c = std::get_if<CnnFamily>(&family)) {
    std::string name;
    switch (c->arch.family) {
      case ArchFamily::Sequential: name = "seq"; break;
      case ArchFamily::Inception: name = "inception"; break;
      case ArchFamily::InceptionResnet: name = "inception_resnet"; break;
    }
    name += std::to_string(c->arch.depth);
    if (c->arch.multi_channel) name += "-multi";
    return name;
  }
  if (const auto* s = std::get_if<SvmFamily>(&family))
    return s->kernel == KernelKind::Linear ? "svm-linear" : "svm-rbf";
  return "constant" + std::to_string(std::get<ConstantFamily>(family).cls);
}

InputMode input_mode(const ArchSpec& arch) {
  return arch.multi_channel ? InputMode::MultiChannel : InputMode::SingleGM;
}

namespace {

std::vector<const Subject*> gather(const DatasetView& view) {
  std::vector<const Subject*> out;
  out.reserve(view.size());
  for (std::size_t j = 0; j < view.size(); ++j) out.push_back(&view[j]);
  return out;
}

double view_accuracy(const Classifier& model, const DatasetView& view) {
  const auto subjects = gather(view);
  const auto pred = classifier_predict(model, subjects);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < subjects.size(); ++j) correct += pred[j] == subjects[j]->label;
  return static_cast<double>(correct) / static_cast<double>(subjects.size());
}

// ---------------------------------------------------------------- CNN

CnnClassifier fit_cnn_once(const ArchSpec& arch, const TrainConfig& config, const DatasetView& train,
                           std::uint64_t seed) {
  const InputMode mode = input_mode(arch);
  const auto subjects = gather(train);
  std::vector<Sample> samples;
  samples.reserve(subjects.size());
  for (const Subject* s : subjects) {
    Tensor x = subject_tensor(*s, mode);
    const Triple e{x.extent(1), x.extent(2), x.extent(3)};
    if (e != arch.input_extent)
      throw ShapeError("subject '" + s->id + "' has extent " + triple_str(e) + " but the model expects " +
                       triple_str(arch.input_extent));
    samples.push_back({std::move(x), s->label});
  }
  Tensor mean(samples.front().input.shape(), 0.0);
  for (const Sample& s : samples)
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.input[i];
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] /= static_cast<double>(samples.size());
  for (Sample& s : samples)
    for (std::size_t i = 0; i < mean.size(); ++i) s.input[i] -= mean[i];

  TrainConfig cfg = config;
  cfg.seed = derive_seed(derive_seed(seed, 2), config.seed);
  cfg.loss_log.reset();
  Network net = build_network(arch, derive_seed(seed, 1));
  TrainedModel model = fit(std::move(net), samples, cfg);
  model.arch = arch;
  return CnnClassifier{std::move(model), std::move(mean)};
}

std::string describe(const TrainConfig& c) {
  return "lr=" + text::format_double(c.learning_rate) + " batch=" + std::to_string(c.batch_size) +
         " epochs=" + std::to_string(c.epochs);
}

Classifier fit_cnn(const CnnFamily& family, const DatasetView& train, std::uint64_t seed,
                   std::size_t inner_k, FitInfo* info) {
  if (family.configs.empty()) throw ConfigError("CNN family has no training config");
  std::size_t best = 0;
  if (family.configs.size() > 1) {
    const FoldPlan plan = stratified_kfold(train.labels_unaudited(), inner_k, derive_seed(seed, 3));
    double best_acc = -1.0;
    for (std::size_t c = 0; c < family.configs.size(); ++c) {
      double sum = 0.0;
      for (std::size_t f = 0; f < plan.k; ++f) {
        const auto inner_train = plan.complement(f);
        const DatasetView tr = train.subset(inner_train).with_phase(AccessPhase::Select);
        const DatasetView te = train.subset(plan.folds[f]).with_phase(AccessPhase::Select);
        const Classifier m = fit_cnn_once(family.arch, family.configs[c], tr, derive_seed(seed, 10 + f));
        sum += view_accuracy(m, te);
      }
      const double acc = sum / static_cast<double>(plan.k);
      if (acc > best_acc) {
        best_acc = acc;
        best = c;
      }
    }
  }
  if (info) info->selected = describe(family.configs[best]);
  return fit_cnn_once(family.arch, family.configs[best], train, seed);
}

// ---------------------------------------------------------------- SVM

Eigen::MatrixXd map_matrix(const std::vector<const Subject*>& subjects, std::size_t map) {
  const std::size_t d = subjects.front()->maps[map].voxels.size();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(subjects.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& v = subjects[i]->maps[map].voxels;
    if (v.size() != d)
      throw ShapeError("subject '" + subjects[i]->id + "' has " + std::to_string(v.size()) +
                       " voxels, expected " + std::to_string(d));
    a.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(d));
  }
  return a;
}

Classifier fit_svm(const SvmFamily& family, const DatasetView& train, std::uint64_t seed,
                   std::size_t inner_k, FitInfo* info) {
  const auto subjects = gather(train);
  SvmClassifier model;
  std::vector<Eigen::MatrixXd> projected;
  Eigen::Index width = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    const Eigen::MatrixXd a = map_matrix(subjects, m);
    model.pca[m] = pca_fit(a, family.variance_target);
    projected.push_back(pca_transform_rows(model.pca[m], a));
    width += projected.back().cols();
  }
  Eigen::MatrixXd features(static_cast<Eigen::Index>(subjects.size()), width);
  Eigen::Index col = 0;
  for (const auto& p : projected) {
    features.middleCols(col, p.cols()) = p;
    col += p.cols();
  }
  std::vector<int> y;
  for (const Subject* s : subjects) y.push_back(s->label == 1 ? 1 : -1);

  double C = family.C_grid.empty() ? 1.0 : family.C_grid.front();
  double gamma = family.gamma_grid.empty() ? 0.0 : family.gamma_grid.front();
  const std::size_t cells =
      family.C_grid.size() * (family.kernel == KernelKind::Linear ? 1 : family.gamma_grid.size());
  if (cells > 1) {
    const GridResult g = grid_search(features, y, family.kernel, family.C_grid, family.gamma_grid,
                                     inner_k, derive_seed(seed, 3), family.options);
    C = g.C;
    gamma = g.gamma;
  }
  const SvmKernel kernel = family.kernel == KernelKind::Linear ? SvmKernel::linear() : SvmKernel::rbf(gamma);
  model.svm = svm_fit(features, y, kernel, C, family.options);
  if (info) {
    info->selected = "C=" + text::format_double(C);
    if (family.kernel == KernelKind::Rbf) info->selected += " gamma=" + text::format_double(gamma);
    info->selected += " k=" + std::to_string(model.pca[0].k()) + "/" + std::to_string(model.pca[1].k()) +
                      "/" + std::to_string(model.pca[2].k());
  }
  return model;
}

}  // namespace

Classifier fit_classifier(const ModelFamily& family, const DatasetView& train, std::uint64_t seed,
                          std::size_t inner_k, FitInfo* info) {
  if (train.size() == 0) throw ConfigError("cannot fit on an empty training set");
  if (const auto* c = std::get_if<CnnFamily>(&family)) return fit_cnn(*c, train, seed, inner_k, info);
  if (const auto* s = std::get_if<SvmFamily>(&family)) return fit_svm(*s, train, seed, inner_k, info);
  const int cls = std::get<ConstantFamily>(family).cls;
  if (cls != 0 && cls != 1) throw ConfigError("constant class must be 0 or 1");
  if (info) info->selected = "class=" + std::to_string(cls);
  return ConstantClassifier{cls};
}

Tensor cnn_input(const CnnClassifier& model, const Subject& subject) {
  Tensor x = subject_tensor(subject, model.model.arch ? input_mode(*model.model.arch) : InputMode::SingleGM);
  if (x.shape() != model.input_mean.shape())
    throw ShapeError("subject '" + subject.id + "' input " + shape_str(x.shape()) +
                     " does not match the model input " + shape_str(model.input_mean.shape()));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= model.input_mean[i];
  return x;
}

Eigen::VectorXd svm_features(const SvmClassifier& model, const Subject& subject) {
  Eigen::Index width = 0;
  for (const auto& p : model.pca) width += p.k();
  Eigen::VectorXd out(width);
  Eigen::Index col = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& v = subject.maps[m].voxels;
    if (static_cast<Eigen::Index>(v.size()) != model.pca[m].dims())
      throw ShapeError("subject '" + subject.id + "' " + std::string(to_string(static_cast<MapKind>(m))) +
                       " map has " + std::to_string(v.size()) + " voxels, the model expects " +
                       std::to_string(model.pca[m].dims()));
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd p = pca_transform(model.pca[m], x);
    out.segment(col, p.size()) = p;
    col += p.size();
  }
  return out;
}

std::vector<double> classifier_scores(const Classifier& model, std::span<const Subject* const> subjects) {
  std::vector<double> out;
  out.reserve(subjects.size());
  if (const auto* c = std::get_if<CnnClassifier>(&model)) {
    std::vector<Tensor> inputs;
    inputs.reserve(subjects.size());
    for (const Subject* s : subjects) inputs.push_back(cnn_input(*c, *s));
    return predict_proba_batch(c->model, inputs);
  }
  if (const auto* s = std::get_if<SvmClassifier>(&model)) {
    for (const Subject* subj : subjects) out.push_back(svm_decision(s->svm, svm_features(*s, *subj)));
    return out;
  }
  const int cls = std::get<ConstantClassifier>(model).cls;
  out.assign(subjects.size(), static_cast<double>(cls));
  return out;
}

int decide(const Classifier& model, double score) {
  if (std::holds_alternative<CnnClassifier>(model)) return score >= 0.5 ? 1 : 0;
  if (std::holds_alternative<SvmClassifier>(model)) return score >= 0.0 ? 1 : 0;
  return std::get<ConstantClassifier>(model).cls;
}

std::vector<int> classifier_predict(const Classifier& model, std::span<const Subject* const> subjects) {
  const auto scores = classifier_scores(model, subjects);
  std::vector<int> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(decide(model, s));
  return out;
}

}  // namespace sz3d
