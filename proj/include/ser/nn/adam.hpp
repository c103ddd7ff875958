#pragma once

#include <map>
#include <string>
#include <vector>

#include "ser/nn/layers.hpp"

namespace ser::nn {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Frozen params are skipped and their gradients
// forced to zero, which keeps frozen tensors bit-identical across any
// number of steps.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // lr_scale multiplies cfg.lr (the epoch decay schedule lives upstream).
  // Throws when any live gradient or updated parameter is non-finite,
  // naming the offending tensor.
  void step(const std::vector<ParamRef>& params, double lr_scale = 1.0);

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> state_;
  std::size_t t_ = 0;
};

}  // namespace ser::nn
