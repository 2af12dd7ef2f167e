#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sz3d/classifier.hpp"
#include "sz3d/folds.hpp"
#include "sz3d/metrics.hpp"

namespace sz3d {

struct CvOptions {
  std::size_t outer_k = 5;
  std::size_t inner_k = 4;
};

struct SubjectPrediction {
  std::size_t index = 0;  // global dataset index
  std::size_t fold = 0;
  int label = 0;
  double score = 0.0;
  int predicted = 0;
};

struct CvResult {
  std::uint64_t seed = 0;
  FoldPlan plan;
  std::vector<Metrics> folds;
  Metrics mean;    // per-fold rates averaged
  Metrics pooled;  // rates from summed confusion counts
  std::vector<Classifier> models;  // one per outer fold
  std::vector<std::string> selected;
  std::vector<SubjectPrediction> predictions;  // in fold order, ascending index within a fold
  AccessLog log;
};

/// Nested cross-validation: per outer fold, fit (with inner-fold selection)
/// on the outer-training part only, then score the held-out fold once.
CvResult nested_cv(const Dataset& data, const ModelFamily& family, std::uint64_t seed,
                   const CvOptions& options = {});

/// True when no subject of outer fold f was read while fitting or selecting
/// for fold f, and evaluation of fold f read only fold f.
bool leakage_free(const CvResult& result);

struct Ensemble {
  std::vector<Classifier> members;
  std::size_t repeat = 0;
  std::vector<std::string> training_ids;  // every subject seen by any member
};

struct RepeatRow {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  Metrics mean;
  Metrics pooled;
  std::vector<Metrics> folds;
  std::vector<std::string> selected;
  bool leakage_free = true;
};

struct RepeatResult {
  std::string family;
  std::vector<RepeatRow> table;
  Metrics mean;  // average of the per-repeat means
  std::size_t best = 0;
  Ensemble ensemble;  // fold models of the best repeat
  CvResult best_run;  // with its models moved into `ensemble`
};

/// Seed of repeat r.
std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t repeat);

/// Index of the highest mean accuracy; ties go to the lowest index.
std::size_t best_repeat(const std::vector<RepeatRow>& table);

RepeatResult repeat_and_average(const Dataset& data, const ModelFamily& family, std::size_t n_repeats,
                                std::uint64_t base_seed, const CvOptions& options = {});

struct Vote {
  int cls = 0;
  double fraction = 0.0;       // votes for `cls` / members
  double fraction_class1 = 0.0;
  double mean_score = 0.0;     // average member score, for comparison only
};

/// Majority of the members' hard predictions. Requires an odd member count.
Vote ensemble_vote(const Ensemble& ensemble, const Subject& subject);
std::vector<Vote> ensemble_vote_batch(const Ensemble& ensemble, std::span<const Subject* const> subjects);

struct TestRow {
  std::string id;
  int label = 0;
  Vote vote;
};

struct TestResult {
  Metrics metrics;            // AUC from the class-1 vote fraction
  double mean_score_auc = 0;  // AUC from averaged member scores
  std::vector<TestRow> rows;
};

TestResult independent_test(const Ensemble& ensemble, const Dataset& test);

}  // namespace sz3d
