#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sz3d/blocks.hpp"
#include "sz3d/kernels.hpp"
#include "sz3d/network.hpp"

namespace sz3d {

enum class ArchFamily { Sequential, Inception, InceptionResnet };
enum class HeadKind { FC128, ConvHead };

std::string_view to_string(ArchFamily family);

/// Everything needed to rebuild a network deterministically (with a seed).
///
/// Sequential:  depth x (Conv + ReLU + MaxPool) -> Flatten -> Dense(dense_units)
///              -> ReLU -> Dense(1) -> Sigmoid
/// Inception*:  Conv(stem) + ReLU + MaxPool -> depth x (Block [+ MaxPool])
///              -> 1x1x1 Conv to one channel -> GlobalAvgPool -> Sigmoid
/// With multi_channel, everything before the head is replicated once per
/// tissue map (three untied branches) and the branch outputs are concatenated.
struct ArchSpec {
  ArchFamily family = ArchFamily::Sequential;
  int depth = 1;
  bool multi_channel = false;
  Triple input_extent{61, 73, 61};  // (D, H, W)
  std::vector<std::size_t> seq_filters{16, 32, 64};
  std::size_t stem_filters = 16;
  InceptionWidths widths{};
  std::size_t dense_units = 128;
  ConvSpec conv{};  // sequential convs and the inception stem
  PoolSpec pool{};
  bool pool_after_block = true;

  HeadKind head() const {
    return family == ArchFamily::Sequential ? HeadKind::FC128 : HeadKind::ConvHead;
  }
  std::size_t input_channels() const { return multi_channel ? 3 : 1; }

  /// Throws ConfigError for depths outside the family's range, empty filter
  /// lists, or any layer whose output extent would vanish.
  void validate() const;

  /// key=value lines; the inverse of parse().
  std::string to_text() const;
  static ArchSpec parse(std::string_view text);

  bool operator==(const ArchSpec&) const = default;
};

/// One of the seven named models: seq1 seq2 seq3 inception1 inception2
/// inception_resnet1 inception_resnet2 (default filter counts).
ArchSpec named_arch(std::string_view name);
std::vector<std::string> arch_names();

/// Shape of the tensor after each layer of one feature-extractor branch,
/// computed by the extent law alone (nothing is allocated).
struct ShapePlan {
  std::vector<std::string> layers;
  std::vector<Shape> shapes;  // per-sample [C, D, H, W] after each layer
  Shape branch_output;        // per-sample output of one branch
  Shape merged_output;        // after concatenating all branches
};
ShapePlan plan_shapes(const ArchSpec& spec);

/// Parameter count from the spec alone (matches the built network's).
std::size_t count_parameters(const ArchSpec& spec);

Network build_sequential(int depth, const ArchSpec& spec, std::uint64_t seed);
Network build_inception(int depth, const ArchSpec& spec, std::uint64_t seed);
Network build_inception_resnet(int depth, const ArchSpec& spec, std::uint64_t seed);
/// Three-branch variant of `base` (multi_channel forced on).
Network build_multichannel(const ArchSpec& base, std::uint64_t seed);
/// Dispatches on spec.family / spec.depth / spec.multi_channel.
Network build_network(const ArchSpec& spec, std::uint64_t seed);

}  // namespace sz3d
