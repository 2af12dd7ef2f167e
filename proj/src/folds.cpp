#include "sz3d/folds.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sz3d/errors.hpp"
#include "sz3d/rng.hpp"

namespace sz3d {

std::vector<std::size_t> FoldPlan::complement(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < folds.size(); ++g)
    if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan stratified_kfold_subset(std::span<const int> labels, std::span<const std::size_t> subset,
                                 std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be at least 2, got " + std::to_string(k));
  std::vector<std::size_t> by_class[2];
  for (std::size_t idx : subset) {
    if (idx >= labels.size()) throw ConfigError("fold subset index out of range");
    const int y = labels[idx];
    if (y != 0 && y != 1) throw ConfigError("labels must be 0 or 1, got " + std::to_string(y));
    by_class[y].push_back(idx);
  }
  for (int c = 0; c < 2; ++c)
    if (!by_class[c].empty() && by_class[c].size() < k)
      throw ConfigError("class " + std::to_string(c) + " has " +
                        std::to_string(by_class[c].size()) + " members, fewer than k=" +
                        std::to_string(k));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.assign(k, {});
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& members : by_class) {
    std::sort(members.begin(), members.end());
    rng.shuffle(members);
    for (std::size_t idx : members) {
      plan.folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

FoldPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return stratified_kfold_subset(labels, all, k, seed);
}

NestedFoldPlan nested_fold_plan(std::span<const int> labels, std::size_t outer_k,
                                std::size_t inner_k, std::uint64_t seed) {
  NestedFoldPlan plan;
  plan.outer = stratified_kfold(labels, outer_k, seed);
  for (std::size_t f = 0; f < outer_k; ++f) {
    const std::vector<std::size_t> train = plan.outer.complement(f);
    plan.inner.push_back(stratified_kfold_subset(labels, train, inner_k, derive_seed(seed, f + 1)));
  }
  return plan;
}

}  // namespace sz3d
