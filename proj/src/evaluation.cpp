#include "sz3d/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "sz3d/errors.hpp"
#include "sz3d/rng.hpp"

namespace sz3d {

namespace {

std::string fold_prefix(std::size_t f) { return "outer fold " + std::to_string(f) + ": "; }

}  // namespace

CvResult nested_cv(const Dataset& data, const ModelFamily& family, std::uint64_t seed,
                   const CvOptions& options) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const Subject& s : data) labels.push_back(s.label);

  CvResult result;
  result.seed = seed;
  result.plan = stratified_kfold(labels, options.outer_k, seed);

  for (std::size_t f = 0; f < result.plan.k; ++f) {
    const DatasetView train(data, result.plan.complement(f), &result.log, f, AccessPhase::Fit);
    const DatasetView test(data, result.plan.folds[f], &result.log, f, AccessPhase::Evaluate);
    FitInfo info;
    Classifier model;
    try {
      model = fit_classifier(family, train, derive_seed(seed, 1000 + f), options.inner_k, &info);
    } catch (const TrainingError& e) {
      throw TrainingError(fold_prefix(f) + e.what(), e.step());
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(fold_prefix(f) + e.what(), e.residual());
    }

    std::vector<const Subject*> subjects;
    for (std::size_t j = 0; j < test.size(); ++j) subjects.push_back(&test[j]);
    const auto scores = classifier_scores(model, subjects);
    std::vector<int> y, pred;
    for (std::size_t j = 0; j < subjects.size(); ++j) {
      y.push_back(subjects[j]->label);
      pred.push_back(decide(model, scores[j]));
      result.predictions.push_back({test.global_index(j), f, y.back(), scores[j], pred.back()});
    }
    result.folds.push_back(compute_metrics(y, pred, scores));
    result.models.push_back(std::move(model));
    result.selected.push_back(info.selected);
  }
  result.mean = mean_metrics(result.folds);
  result.pooled = pooled_metrics(result.folds);
  return result;
}

bool leakage_free(const CvResult& result) {
  for (std::size_t f = 0; f < result.plan.k; ++f) {
    const auto& held_out = result.plan.folds[f];
    for (AccessPhase phase : {AccessPhase::Fit, AccessPhase::Select}) {
      const auto touched = result.log.touched(f, phase);
      std::vector<std::size_t> overlap;
      std::set_intersection(touched.begin(), touched.end(), held_out.begin(), held_out.end(),
                            std::back_inserter(overlap));
      if (!overlap.empty()) return false;
    }
    const auto evaluated = result.log.touched(f, AccessPhase::Evaluate);
    if (!std::includes(held_out.begin(), held_out.end(), evaluated.begin(), evaluated.end())) return false;
  }
  return true;
}

std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t repeat) {
  return derive_seed(base_seed, repeat);
}

std::size_t best_repeat(const std::vector<RepeatRow>& table) {
  if (table.empty()) throw ConfigError("no repeats to choose from");
  std::size_t best = 0;
  for (std::size_t r = 1; r < table.size(); ++r)
    if (table[r].mean.accuracy > table[best].mean.accuracy) best = r;
  return best;
}

RepeatResult repeat_and_average(const Dataset& data, const ModelFamily& family, std::size_t n_repeats,
                                std::uint64_t base_seed, const CvOptions& options) {
  if (n_repeats < 1) throw ConfigError("at least one repeat is required");
  RepeatResult out;
  out.family = family_name(family);
  std::vector<Metrics> means;
  for (std::size_t r = 0; r < n_repeats; ++r) {
    CvResult run = nested_cv(data, family, repeat_seed(base_seed, r), options);
    RepeatRow row{r, run.seed, run.mean, run.pooled, run.folds, run.selected, leakage_free(run)};
    means.push_back(run.mean);
    out.table.push_back(row);
    if (r == 0 || run.mean.accuracy > out.best_run.mean.accuracy) out.best_run = std::move(run);
  }
  out.mean = mean_metrics(means);
  out.best = best_repeat(out.table);
  out.ensemble.repeat = out.best;
  out.ensemble.members = std::move(out.best_run.models);
  for (const Subject& s : data) out.ensemble.training_ids.push_back(s.id);
  out.best_run.models.clear();
  return out;
}

std::vector<Vote> ensemble_vote_batch(const Ensemble& ensemble, std::span<const Subject* const> subjects) {
  const std::size_t m = ensemble.members.size();
  if (m == 0 || m % 2 == 0)
    throw ConfigError("ensemble needs an odd number of members, has " + std::to_string(m));
  std::vector<std::size_t> votes(subjects.size(), 0);
  std::vector<double> score_sum(subjects.size(), 0.0);
  for (const Classifier& member : ensemble.members) {
    const auto scores = classifier_scores(member, subjects);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      votes[i] += static_cast<std::size_t>(decide(member, scores[i]));
      score_sum[i] += scores[i];
    }
  }
  std::vector<Vote> out;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    Vote v;
    v.cls = 2 * votes[i] > m ? 1 : 0;
    const std::size_t agree = v.cls == 1 ? votes[i] : m - votes[i];
    v.fraction = static_cast<double>(agree) / static_cast<double>(m);
    v.fraction_class1 = static_cast<double>(votes[i]) / static_cast<double>(m);
    v.mean_score = score_sum[i] / static_cast<double>(m);
    out.push_back(v);
  }
  return out;
}

Vote ensemble_vote(const Ensemble& ensemble, const Subject& subject) {
  const Subject* s = &subject;
  return ensemble_vote_batch(ensemble, std::span<const Subject* const>(&s, 1)).front();
}

TestResult independent_test(const Ensemble& ensemble, const Dataset& test) {
  std::vector<const Subject*> subjects;
  for (const Subject& s : test) subjects.push_back(&s);
  const auto votes = ensemble_vote_batch(ensemble, subjects);
  TestResult out;
  std::vector<int> y, pred;
  std::vector<double> frac, mean_score;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    out.rows.push_back({subjects[i]->id, subjects[i]->label, votes[i]});
    y.push_back(subjects[i]->label);
    pred.push_back(votes[i].cls);
    frac.push_back(votes[i].fraction_class1);
    mean_score.push_back(votes[i].mean_score);
  }
  out.metrics = compute_metrics(y, pred, frac);
  out.mean_score_auc = roc_auc(mean_score, y);
  return out;
}

}  // namespace sz3d
