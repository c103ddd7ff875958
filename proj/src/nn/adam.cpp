#include "ser/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ser::nn {

void Adam::step(const std::vector<ParamRef>& params, double lr_scale) {
  ++t_;
  const double lr = cfg_.lr * lr_scale;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (const auto& pr : params) {
    Param& p = *pr.param;
    if (p.frozen) {
      p.grad.fill(0.0);
      continue;
    }
    if (!p.grad.all_finite())
      throw std::runtime_error("adam: non-finite gradient in '" + pr.name + "'");

    Moments& mo = state_[pr.name];
    if (mo.m.empty()) {
      mo.m = Tensor(p.value.dims);
      mo.v = Tensor(p.value.dims);
    }
    if (!mo.m.same_shape(p.value))
      throw std::logic_error("adam: state shape changed for '" + pr.name + "'");

    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = mo.m[i] / bc1;
      const double vhat = mo.v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    if (!p.value.all_finite())
      throw std::runtime_error("adam: parameter '" + pr.name + "' became non-finite");
  }
}

}  // namespace ser::nn
