#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vageo/bbox.hpp"
#include "vageo/model.hpp"

namespace vageo {

struct TrainConfig {
  double lr0 = 1e-4;
  int64_t halve_every = 10;
  int64_t batch_size = 12;
  int64_t epochs = 25;

  void validate() const;
};

// lr0 * 0.5^floor(epoch / halve_every)
double lr_schedule(int64_t epoch, const TrainConfig& config);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers live in registry order; the checkpoint code
// maps them back to parameter names.
class Adam {
 public:
  Adam(ParamRegistry& registry, AdamConfig config = {});

  void step(double lr);

  int64_t steps() const { return t_; }
  void set_steps(int64_t t) { t_ = t; }
  const AdamConfig& config() const { return config_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }

 private:
  ParamRegistry& registry_;
  AdamConfig config_;
  int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct Batch {
  Tensor queries;     // B x (C+1) x H x W
  Tensor references;  // B x 3 x Hr x Wr
  std::vector<BBox> boxes;
};

// One optimisation step on detection_loss; returns the pre-update loss.
double train_step(GeoLocalizer& model, Adam& optimizer, const Batch& batch, double lr);

}  // namespace vageo
