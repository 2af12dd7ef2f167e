#include "sz3d/architectures.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "sz3d/errors.hpp"
#include "text_format.hpp"

namespace sz3d {

std::string_view to_string(ArchFamily family) {
  switch (family) {
    case ArchFamily::Sequential: return "sequential";
    case ArchFamily::Inception: return "inception";
    case ArchFamily::InceptionResnet: return "inception_resnet";
  }
  return "?";
}

namespace {

std::size_t kernel_volume(const Triple& k) { return k[0] * k[1] * k[2]; }

Triple after_conv(const Triple& in, const ConvSpec& c) {
  return output_extents(in, c.kernel, c.stride, c.padding);
}

Triple after_pool(const Triple& in, const PoolSpec& p) {
  return output_extents(in, p.window, p.stride, p.padding);
}

bool vanished(const Triple& t) { return t[0] == 0 || t[1] == 0 || t[2] == 0; }

Shape per_sample(std::size_t c, const Triple& t) { return {c, t[0], t[1], t[2]}; }

void check_depth(const ArchSpec& spec) {
  if (spec.family == ArchFamily::Sequential) {
    if (spec.depth < 1 || spec.depth > 3)
      throw ConfigError("sequential depth must be 1, 2 or 3, got " + std::to_string(spec.depth));
    if (spec.seq_filters.size() < static_cast<std::size_t>(spec.depth))
      throw ConfigError("sequential depth " + std::to_string(spec.depth) + " needs " +
                        std::to_string(spec.depth) + " filter counts, got " +
                        std::to_string(spec.seq_filters.size()));
  } else if (spec.depth < 1 || spec.depth > 2) {
    throw ConfigError(std::string(to_string(spec.family)) + " depth must be 1 or 2, got " +
                      std::to_string(spec.depth));
  }
}

}  // namespace

ShapePlan plan_shapes(const ArchSpec& spec) {
  check_depth(spec);
  spec.conv.validate();
  spec.pool.validate();
  ShapePlan plan;
  Triple ext = spec.input_extent;
  if (vanished(ext)) throw ConfigError("input extent must be positive, got " + triple_str(ext));
  std::size_t c = 1;
  auto record = [&](std::string name) {
    if (vanished(ext))
      throw ConfigError("input extent " + triple_str(spec.input_extent) + " too small for " +
                        std::string(to_string(spec.family)) + " depth " +
                        std::to_string(spec.depth) + ": " + name + " output vanishes");
    plan.layers.push_back(std::move(name));
    plan.shapes.push_back(per_sample(c, ext));
  };

  if (spec.family == ArchFamily::Sequential) {
    for (int i = 0; i < spec.depth; ++i) {
      c = spec.seq_filters[i];
      if (c == 0) throw ConfigError("filter counts must be positive");
      ext = after_conv(ext, spec.conv);
      record("conv" + std::to_string(i + 1));
      ext = after_pool(ext, spec.pool);
      record("pool" + std::to_string(i + 1));
    }
  } else {
    c = spec.stem_filters;
    if (c == 0 || spec.widths.branch1 == 0 || spec.widths.reduce3 == 0 ||
        spec.widths.branch3 == 0 || spec.widths.reduce5 == 0 || spec.widths.branch5 == 0 ||
        spec.widths.pool_proj == 0)
      throw ConfigError("inception channel widths must be positive");
    ext = after_conv(ext, spec.conv);
    record("stem_conv");
    ext = after_pool(ext, spec.pool);
    record("stem_pool");
    for (int i = 0; i < spec.depth; ++i) {
      c = spec.widths.out_channels();
      record("block" + std::to_string(i + 1));
      if (spec.pool_after_block) {
        ext = after_pool(ext, spec.pool);
        record("block_pool" + std::to_string(i + 1));
      }
    }
  }
  plan.branch_output = per_sample(c, ext);
  plan.merged_output = per_sample(c * spec.input_channels(), ext);
  return plan;
}

void ArchSpec::validate() const {
  if (family == ArchFamily::Sequential && dense_units == 0)
    throw ConfigError("dense_units must be positive");
  plan_shapes(*this);
}

std::size_t count_parameters(const ArchSpec& spec) {
  const ShapePlan plan = plan_shapes(spec);
  const std::size_t kv = kernel_volume(spec.conv.kernel);
  std::size_t branch = 0;
  if (spec.family == ArchFamily::Sequential) {
    std::size_t cin = 1;
    for (int i = 0; i < spec.depth; ++i) {
      const std::size_t cout = spec.seq_filters[i];
      branch += cin * cout * kv + cout;
      cin = cout;
    }
    const std::size_t features = shape_numel(plan.merged_output);
    const std::size_t u = spec.dense_units;
    return branch * spec.input_channels() + features * u + u + u + 1;
  }
  const InceptionWidths& w = spec.widths;
  std::size_t cin = spec.stem_filters;
  branch += 1 * cin * kv + cin;
  for (int i = 0; i < spec.depth; ++i) {
    branch += cin * w.branch1 + w.branch1;
    branch += cin * w.reduce3 + w.reduce3 + w.reduce3 * w.branch3 * 27 + w.branch3;
    branch += cin * w.reduce5 + w.reduce5 + w.reduce5 * w.branch5 * 125 + w.branch5;
    branch += cin * w.pool_proj + w.pool_proj;
    if (spec.family == ArchFamily::InceptionResnet && cin != w.out_channels())
      branch += cin * w.out_channels() + w.out_channels();
    cin = w.out_channels();
  }
  return branch * spec.input_channels() + plan.merged_output[0] + 1;
}

namespace {

Sequential build_branch(const ArchSpec& spec) {
  Sequential seq;
  if (spec.family == ArchFamily::Sequential) {
    std::size_t cin = 1;
    for (int i = 0; i < spec.depth; ++i) {
      seq.push_back(std::make_unique<Conv3D>(cin, spec.seq_filters[i], spec.conv));
      seq.push_back(std::make_unique<ReLU>());
      seq.push_back(std::make_unique<MaxPool3D>(spec.pool));
      cin = spec.seq_filters[i];
    }
    return seq;
  }
  seq.push_back(std::make_unique<Conv3D>(1, spec.stem_filters, spec.conv));
  seq.push_back(std::make_unique<ReLU>());
  seq.push_back(std::make_unique<MaxPool3D>(spec.pool));
  std::size_t cin = spec.stem_filters;
  for (int i = 0; i < spec.depth; ++i) {
    if (spec.family == ArchFamily::InceptionResnet)
      seq.push_back(std::make_unique<InceptionResnetBlock>(
          make_inception_resnet_block(cin, spec.widths)));
    else
      seq.push_back(std::make_unique<InceptionBlock>(make_inception_block(cin, spec.widths)));
    if (spec.pool_after_block) seq.push_back(std::make_unique<MaxPool3D>(spec.pool));
    cin = spec.widths.out_channels();
  }
  return seq;
}

Network assemble(const ArchSpec& spec, std::uint64_t seed) {
  const ShapePlan plan = plan_shapes(spec);
  if (spec.family == ArchFamily::Sequential && spec.dense_units == 0)
    throw ConfigError("dense_units must be positive");

  Sequential body;
  if (spec.multi_channel) {
    std::vector<Sequential> branches;
    for (std::size_t b = 0; b < spec.input_channels(); ++b) branches.push_back(build_branch(spec));
    body.push_back(std::make_unique<ChannelBranches>(std::move(branches), 1));
  } else {
    Sequential branch = build_branch(spec);
    for (std::size_t i = 0; i < branch.size(); ++i) body.push_back(branch[i].clone());
  }

  if (spec.head() == HeadKind::FC128) {
    body.push_back(std::make_unique<Flatten>());
    body.push_back(std::make_unique<Dense>(shape_numel(plan.merged_output), spec.dense_units));
    body.push_back(std::make_unique<ReLU>());
    body.push_back(std::make_unique<Dense>(spec.dense_units, 1));
  } else {
    body.push_back(std::make_unique<Conv3D>(plan.merged_output[0], 1,
                                            ConvSpec{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}}));
    body.push_back(std::make_unique<GlobalAvgPool>());
  }
  Network net(std::move(body));
  init_parameters(net, seed);
  return net;
}

ArchSpec with_family(ArchSpec spec, ArchFamily family, int depth) {
  spec.family = family;
  spec.depth = depth;
  return spec;
}

}  // namespace

Network build_sequential(int depth, const ArchSpec& spec, std::uint64_t seed) {
  return assemble(with_family(spec, ArchFamily::Sequential, depth), seed);
}

Network build_inception(int depth, const ArchSpec& spec, std::uint64_t seed) {
  return assemble(with_family(spec, ArchFamily::Inception, depth), seed);
}

Network build_inception_resnet(int depth, const ArchSpec& spec, std::uint64_t seed) {
  return assemble(with_family(spec, ArchFamily::InceptionResnet, depth), seed);
}

Network build_multichannel(const ArchSpec& base, std::uint64_t seed) {
  ArchSpec spec = base;
  spec.multi_channel = true;
  return assemble(spec, seed);
}

Network build_network(const ArchSpec& spec, std::uint64_t seed) { return assemble(spec, seed); }

ArchSpec named_arch(std::string_view name) {
  static const std::map<std::string, std::pair<ArchFamily, int>, std::less<>> table{
      {"seq1", {ArchFamily::Sequential, 1}},
      {"seq2", {ArchFamily::Sequential, 2}},
      {"seq3", {ArchFamily::Sequential, 3}},
      {"inception1", {ArchFamily::Inception, 1}},
      {"inception2", {ArchFamily::Inception, 2}},
      {"inception_resnet1", {ArchFamily::InceptionResnet, 1}},
      {"inception_resnet2", {ArchFamily::InceptionResnet, 2}},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown architecture '" + std::string(name) + "'");
  ArchSpec spec;
  spec.family = it->second.first;
  spec.depth = it->second.second;
  return spec;
}

std::vector<std::string> arch_names() {
  return {"seq1", "seq2", "seq3", "inception1", "inception2", "inception_resnet1",
          "inception_resnet2"};
}

// ----------------------------------------------------------- text format

std::string ArchSpec::to_text() const {
  std::ostringstream os;
  os << "family=" << to_string(family) << '\n'
     << "depth=" << depth << '\n'
     << "multi_channel=" << (multi_channel ? 1 : 0) << '\n'
     << "input_extent=" << triple_str(input_extent) << '\n'
     << "seq_filters=" << text::join(seq_filters) << '\n'
     << "stem_filters=" << stem_filters << '\n'
     << "inception_widths="
     << text::join(std::vector<std::size_t>{widths.branch1, widths.reduce3, widths.branch3,
                                            widths.reduce5, widths.branch5, widths.pool_proj})
     << '\n'
     << "dense_units=" << dense_units << '\n'
     << "conv_kernel=" << triple_str(conv.kernel) << '\n'
     << "conv_stride=" << triple_str(conv.stride) << '\n'
     << "conv_padding=" << triple_str(conv.padding) << '\n'
     << "pool_window=" << triple_str(pool.window) << '\n'
     << "pool_stride=" << triple_str(pool.stride) << '\n'
     << "pool_padding=" << triple_str(pool.padding) << '\n'
     << "pool_after_block=" << (pool_after_block ? 1 : 0) << '\n';
  return os.str();
}

ArchSpec ArchSpec::parse(std::string_view text) {
  ArchSpec spec;
  for (const auto& [key, value] : text::parse_key_values(text)) {
    if (key == "family") {
      if (value == "sequential") spec.family = ArchFamily::Sequential;
      else if (value == "inception") spec.family = ArchFamily::Inception;
      else if (value == "inception_resnet") spec.family = ArchFamily::InceptionResnet;
      else throw ConfigError("unknown family '" + value + "'");
    } else if (key == "depth") {
      spec.depth = static_cast<int>(text::parse_uint(value, key));
    } else if (key == "multi_channel") {
      spec.multi_channel = text::parse_bool(value, key);
    } else if (key == "input_extent") {
      spec.input_extent = text::parse_triple(value, key);
    } else if (key == "seq_filters") {
      spec.seq_filters = text::parse_uint_list(value, key);
    } else if (key == "stem_filters") {
      spec.stem_filters = text::parse_uint(value, key);
    } else if (key == "inception_widths") {
      const auto w = text::parse_uint_list(value, key);
      if (w.size() != 6) throw ConfigError("inception_widths needs 6 values");
      spec.widths = {w[0], w[1], w[2], w[3], w[4], w[5]};
    } else if (key == "dense_units") {
      spec.dense_units = text::parse_uint(value, key);
    } else if (key == "conv_kernel") {
      spec.conv.kernel = text::parse_triple(value, key);
    } else if (key == "conv_stride") {
      spec.conv.stride = text::parse_triple(value, key);
    } else if (key == "conv_padding") {
      spec.conv.padding = text::parse_triple(value, key);
    } else if (key == "pool_window") {
      spec.pool.window = text::parse_triple(value, key);
    } else if (key == "pool_stride") {
      spec.pool.stride = text::parse_triple(value, key);
    } else if (key == "pool_padding") {
      spec.pool.padding = text::parse_triple(value, key);
    } else if (key == "pool_after_block") {
      spec.pool_after_block = text::parse_bool(value, key);
    } else {
      throw ConfigError("unknown architecture key '" + key + "'");
    }
  }
  return spec;
}

}  // namespace sz3d
