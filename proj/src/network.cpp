#include "sz3d/network.hpp"

#include <cmath>

#include "sz3d/errors.hpp"
#include "sz3d/rng.hpp"

namespace sz3d {

Network::Network(Sequential body) : body_(std::move(body)) {
  body_.set_requires_input_grad(false);
}

namespace {

void check_logits(const Tensor& logits) {
  if (logits.rank() != 2 || logits.extent(1) != 1)
    throw ShapeError("network body must produce logits [N,1], got " + shape_str(logits.shape()));
}

}  // namespace

Tensor Network::forward_logits(const Tensor& batch) {
  Tensor logits = body_.forward(batch);
  check_logits(logits);
  return logits;
}

void Network::backward_logits(const Tensor& grad_logits) { body_.backward(grad_logits); }

Tensor Network::infer_logits(const Tensor& batch) const {
  Tensor logits = body_.infer(batch);
  check_logits(logits);
  return logits;
}

std::vector<double> Network::infer_proba(const Tensor& batch) const {
  const Tensor logits = infer_logits(batch);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits[i]);
  return p;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

std::vector<LayerKind> Network::layer_kinds() const {
  std::vector<LayerKind> kinds;
  body_.for_each_child([&](const Layer& l) { kinds.push_back(l.kind()); });
  kinds.push_back(LayerKind::Sigmoid);
  return kinds;
}

std::size_t Network::count(LayerKind kind) const {
  return count_layers(body_, kind) + (kind == LayerKind::Sigmoid ? 1 : 0);
}

void init_parameters(Network& network, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : network.parameters()) {
    if (p->value.rank() < 2) {
      p->value.fill(0.0);
      continue;
    }
    const std::size_t fan_in = p->value.size() / p->value.extent(0);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : p->value.data()) w = std_dev * rng.normal();
  }
}

}  // namespace sz3d
