#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sz3d/pca.hpp"
#include "sz3d/svm.hpp"
#include "sz3d/training.hpp"
#include "sz3d/volume.hpp"

namespace sz3d {

// ------------------------------------------------------------ data access audit

enum class AccessPhase { Fit, Select, Evaluate };
std::string_view to_string(AccessPhase phase);

struct AccessRecord {
  std::size_t fold = 0;
  AccessPhase phase = AccessPhase::Fit;
  std::size_t index = 0;  // global dataset index
};

class AccessLog {
 public:
  void record(std::size_t fold, AccessPhase phase, std::size_t index) {
    entries_.push_back({fold, phase, index});
  }
  const std::vector<AccessRecord>& entries() const { return entries_; }
  /// Sorted unique indices touched in `fold` during `phase`.
  std::vector<std::size_t> touched(std::size_t fold, AccessPhase phase) const;

 private:
  std::vector<AccessRecord> entries_;
};

/// A read-only window onto part of a dataset. Every subject read through it
/// is recorded in the log (when one is attached) under the view's fold and phase.
class DatasetView {
 public:
  DatasetView(const Dataset& data, std::vector<std::size_t> indices, AccessLog* log = nullptr,
              std::size_t fold = 0, AccessPhase phase = AccessPhase::Fit);

  std::size_t size() const { return indices_.size(); }
  const Subject& operator[](std::size_t j) const;
  int label(std::size_t j) const { return (*this)[j].label; }
  std::size_t global_index(std::size_t j) const { return indices_[j]; }
  const std::vector<std::size_t>& indices() const { return indices_; }

  /// Labels without recording access; fold planning needs only these.
  std::vector<int> labels_unaudited() const;

  /// A view over local positions `local` of this view.
  DatasetView subset(std::span<const std::size_t> local) const;
  DatasetView with_phase(AccessPhase phase) const;

 private:
  const Dataset* data_;
  std::vector<std::size_t> indices_;
  AccessLog* log_;
  std::size_t fold_;
  AccessPhase phase_;
};

// ------------------------------------------------------------ model families

/// CNN trained from scratch. With more than one config, the inner folds pick
/// the config with the best mean accuracy (ties: earliest in the list).
struct CnnFamily {
  ArchSpec arch;
  std::vector<TrainConfig> configs{TrainConfig{}};
};

/// Per-map PCA, concatenated projections, SVM tuned by inner grid search.
struct SvmFamily {
  KernelKind kernel = KernelKind::Linear;
  std::vector<double> C_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  double variance_target = 0.95;
  SvmOptions options{};
};

/// Always predicts `cls`; a debugging oracle for the protocol.
struct ConstantFamily {
  int cls = 1;
};

using ModelFamily = std::variant<CnnFamily, SvmFamily, ConstantFamily>;

std::string family_name(const ModelFamily& family);
InputMode input_mode(const ArchSpec& arch);

// ------------------------------------------------------------ fitted models

struct CnnClassifier {
  TrainedModel model;
  Tensor input_mean;  // subtracted from every input; fit on the training set
};

struct SvmClassifier {
  std::array<PcaModel, 3> pca;  // GM, WM, CSF
  SvmModel svm;
};

struct ConstantClassifier {
  int cls = 1;
};

using Classifier = std::variant<CnnClassifier, SvmClassifier, ConstantClassifier>;

struct FitInfo {
  std::string selected;  // chosen hyperparameters, human readable
};

/// Fits on every subject of `train`; hyperparameter selection uses `inner_k`
/// stratified folds of `train` only.
Classifier fit_classifier(const ModelFamily& family, const DatasetView& train, std::uint64_t seed,
                          std::size_t inner_k, FitInfo* info = nullptr);

/// Higher means more likely class 1: probability (CNN), decision value
/// (SVM), or the constant class.
std::vector<double> classifier_scores(const Classifier& model, std::span<const Subject* const> subjects);
std::vector<int> classifier_predict(const Classifier& model, std::span<const Subject* const> subjects);
/// Hard decision for a score produced by the same model.
int decide(const Classifier& model, double score);

/// Centered network input for one subject.
Tensor cnn_input(const CnnClassifier& model, const Subject& subject);

/// Concatenated PCA features for one subject.
Eigen::VectorXd svm_features(const SvmClassifier& model, const Subject& subject);

}  // namespace sz3d
