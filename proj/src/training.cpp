#include "sz3d/training.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sz3d/errors.hpp"
#include "sz3d/rng.hpp"
#include "text_format.hpp"

namespace sz3d {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0,1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("Adam betas must be in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "learning_rate=" << text::format_double(learning_rate) << '\n'
     << "batch_size=" << batch_size << '\n'
     << "epochs=" << epochs << '\n'
     << "optimizer=" << (optimizer == OptimizerKind::Adam ? "adam" : "sgd") << '\n'
     << "momentum=" << text::format_double(momentum) << '\n'
     << "beta1=" << text::format_double(beta1) << '\n'
     << "beta2=" << text::format_double(beta2) << '\n'
     << "epsilon=" << text::format_double(epsilon) << '\n'
     << "seed=" << seed << '\n'
     << "shuffle=" << (shuffle ? 1 : 0) << '\n';
  return os.str();
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  for (const auto& [key, value] : text::parse_key_values(text)) {
    if (key == "learning_rate") c.learning_rate = text::parse_double(value, key);
    else if (key == "batch_size") c.batch_size = text::parse_uint(value, key);
    else if (key == "epochs") c.epochs = text::parse_uint(value, key);
    else if (key == "optimizer") {
      if (value == "adam") c.optimizer = OptimizerKind::Adam;
      else if (value == "sgd") c.optimizer = OptimizerKind::SgdMomentum;
      else throw ConfigError("unknown optimizer '" + value + "'");
    } else if (key == "momentum") c.momentum = text::parse_double(value, key);
    else if (key == "beta1") c.beta1 = text::parse_double(value, key);
    else if (key == "beta2") c.beta2 = text::parse_double(value, key);
    else if (key == "epsilon") c.epsilon = text::parse_double(value, key);
    else if (key == "seed") c.seed = text::parse_uint(value, key);
    else if (key == "shuffle") c.shuffle = text::parse_bool(value, key);
    else throw ConfigError("unknown training key '" + key + "'");
  }
  return c;
}

BceResult bce_from_logit(double z, int label) {
  const double y = label ? 1.0 : 0.0;
  const double loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  return {loss, sigmoid(z) - y};
}

double bce_mean(std::span<const double> logits, std::span<const int> labels) {
  if (logits.size() != labels.size() || logits.empty())
    throw ShapeError("bce_mean needs equally sized, non-empty logits and labels");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += bce_from_logit(logits[i], labels[i]).loss;
  return sum / static_cast<double>(logits.size());
}

Tensor stack_inputs(std::span<const Tensor* const> inputs) {
  if (inputs.empty()) throw ShapeError("cannot stack an empty batch");
  const Shape& s = inputs.front()->shape();
  Shape batched{inputs.size()};
  batched.insert(batched.end(), s.begin(), s.end());
  Tensor out(batched);
  const std::size_t n = inputs.front()->size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i]->shape() != s)
      throw ShapeError("sample " + std::to_string(i) + " shape " + shape_str(inputs[i]->shape()) +
                       " differs from " + shape_str(s));
    std::copy(inputs[i]->data().begin(), inputs[i]->data().end(), out.data().begin() + i * n);
  }
  return out;
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const std::vector<Parameter*>& params) : c_(config) {
    for (const Parameter* p : params) {
      first_.emplace_back(p->value.size(), 0.0);
      if (c_.optimizer == OptimizerKind::Adam) second_.emplace_back(p->value.size(), 0.0);
    }
  }

  void step(const std::vector<Parameter*>& params) {
    ++t_;
    const double lr = c_.learning_rate;
    const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto w = params[k]->value.data();
      auto g = params[k]->grad.data();
      if (g.size() != w.size())
        throw StateError("parameter '" + params[k]->name + "' has no gradient for this step");
      auto& m = first_[k];
      if (c_.optimizer == OptimizerKind::SgdMomentum) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = c_.momentum * m[i] + g[i];
          w[i] -= lr * m[i];
        }
      } else {
        auto& v = second_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = c_.beta1 * m[i] + (1.0 - c_.beta1) * g[i];
          v[i] = c_.beta2 * v[i] + (1.0 - c_.beta2) * g[i] * g[i];
          const double m_hat = m[i] / bc1;
          const double v_hat = v[i] / bc2;
          w[i] -= lr * m_hat / (std::sqrt(v_hat) + c_.epsilon);
        }
      }
    }
  }

 private:
  const TrainConfig& c_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::size_t t_ = 0;
};

}  // namespace

TrainedModel fit(Network network, std::span<const Sample> data, const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw ConfigError("cannot train on an empty dataset");
  if (config.batch_size > data.size())
    throw ConfigError("batch_size " + std::to_string(config.batch_size) + " exceeds dataset size " +
                      std::to_string(data.size()));
  for (const Sample& s : data)
    if (s.input.shape() != data.front().input.shape())
      throw ShapeError("training samples have mixed shapes: " + shape_str(s.input.shape()) +
                       " vs " + shape_str(data.front().input.shape()));

  std::vector<Parameter*> params = network.parameters();
  Optimizer opt(config, params);
  Rng rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainedModel model;
  model.config = config;
  model.config.loss_log.reset();
  std::size_t step = 0;
  std::vector<const Tensor*> batch_inputs;
  std::vector<int> batch_labels;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch_inputs.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch_inputs.push_back(&data[order[i]].input);
        batch_labels.push_back(data[order[i]].label);
      }
      const Tensor logits = network.forward_logits(stack_inputs(batch_inputs));
      const double inv_b = 1.0 / static_cast<double>(end - start);
      Tensor grad(logits.shape());
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        const BceResult r = bce_from_logit(logits[i], batch_labels[i]);
        batch_loss += r.loss;
        grad[i] = r.grad_logit * inv_b;
      }
      if (!std::isfinite(batch_loss))
        throw TrainingError("training diverged: non-finite loss at step " + std::to_string(step),
                            step);
      network.backward_logits(grad);
      opt.step(params);
      epoch_loss += batch_loss;
      ++step;
    }
    model.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  model.final_loss = model.loss_history.back();

  if (config.loss_log) {
    std::ofstream log(*config.loss_log);
    if (!log) throw IoError("cannot write loss log " + config.loss_log->string());
    log << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < model.loss_history.size(); ++e)
      log << e + 1 << ',' << text::format_double(model.loss_history[e]) << '\n';
  }
  model.network = std::move(network);
  return model;
}

namespace {

void check_sample_shape(const TrainedModel& model, const Tensor& sample) {
  if (!model.arch) return;
  const ArchSpec& a = *model.arch;
  const Shape expected{a.input_channels(), a.input_extent[0], a.input_extent[1], a.input_extent[2]};
  if (sample.shape() != expected)
    throw ShapeError("sample shape " + shape_str(sample.shape()) + " does not match the model input " +
                     shape_str(expected));
}

}  // namespace

double predict_proba(const TrainedModel& model, const Tensor& sample) {
  check_sample_shape(model, sample);
  const Tensor* one[] = {&sample};
  return model.network.infer_proba(stack_inputs(one)).front();
}

std::vector<double> predict_proba_batch(const TrainedModel& model, std::span<const Tensor> samples) {
  constexpr std::size_t kChunk = 16;
  std::vector<double> out;
  out.reserve(samples.size());
  std::vector<const Tensor*> chunk;
  for (const Tensor& s : samples) check_sample_shape(model, s);
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + kChunk); ++i)
      chunk.push_back(&samples[i]);
    for (double p : model.network.infer_proba(stack_inputs(chunk))) out.push_back(p);
  }
  return out;
}

int predict(const TrainedModel& model, const Tensor& sample, double threshold) {
  return predict_proba(model, sample) >= threshold ? 1 : 0;
}

}  // namespace sz3d
