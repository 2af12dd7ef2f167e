#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sz3d {

/// k disjoint, exhaustive, label-stratified index sets.
struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;  // each sorted ascending

  /// Every index not in fold f, ascending.
  std::vector<std::size_t> complement(std::size_t f) const;
};

/// Shuffles each class with `seed` and deals it round-robin over the folds,
/// continuing where the previous class stopped so fold sizes stay balanced.
/// Requires labels in {0,1} and at least k members per present class.
FoldPlan stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Stratified folds over a subset of a larger index space. Returned indices
/// are global (elements of `subset`).
FoldPlan stratified_kfold_subset(std::span<const int> labels, std::span<const std::size_t> subset,
                                 std::size_t k, std::uint64_t seed);

/// Outer folds plus, for each outer fold, inner folds over its training part.
struct NestedFoldPlan {
  FoldPlan outer;
  std::vector<FoldPlan> inner;
};

NestedFoldPlan nested_fold_plan(std::span<const int> labels, std::size_t outer_k,
                                std::size_t inner_k, std::uint64_t seed);

}  // namespace sz3d
