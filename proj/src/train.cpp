#include "vageo/train.hpp"

#include <cmath>

#include "vageo/error.hpp"

namespace vageo {

void TrainConfig::validate() const {
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ConfigError("learning rate must be finite and non-negative");
  if (halve_every < 1) throw ConfigError("halve_every must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

double lr_schedule(int64_t epoch, const TrainConfig& config) {
  if (epoch < 0) throw PreconditionError("epoch must be non-negative");
  if (config.halve_every < 1) throw ConfigError("halve_every must be >= 1");
  return std::ldexp(config.lr0, -static_cast<int>(epoch / config.halve_every));
}

Adam::Adam(ParamRegistry& registry, AdamConfig config) : registry_(registry), config_(config) {
  for (const auto& p : registry_.params) {
    m_.emplace_back(p.param->value.shape());
    v_.emplace_back(p.param->value.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (size_t k = 0; k < registry_.params.size(); ++k) {
    Param& p = *registry_.params[k].param;
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
    }
  }
}

double train_step(GeoLocalizer& model, Adam& optimizer, const Batch& batch, double lr) {
  model.zero_grad();
  const DetectionGrid grid = model.forward(batch.queries, batch.references, Mode::train);
  const LossResult loss = detection_loss(grid, batch.boxes, model.stride(), model.config().anchors,
                                         model.config().box_weight);
  if (!std::isfinite(loss.value)) throw Error("non-finite training loss");
  model.backward(loss.grad_logits);
  optimizer.step(lr);
  return loss.value;
}

}  // namespace vageo
