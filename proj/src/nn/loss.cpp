#include "ser/nn/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace ser::nn {

namespace {

void check_logits(const Tensor& t, const char* who) {
  if ((t.ndim() != 1 && t.ndim() != 2) || t.empty())
    throw std::invalid_argument(std::string(who) + ": want nonempty [K] or [BxK], got " +
                                t.shape_str());
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  check_logits(logits, "softmax");
  const std::size_t k = logits.dims.back();
  const std::size_t batch = logits.size() / k;
  Tensor p = logits;
  for (std::size_t r = 0; r < batch; ++r) {
    double* row = p.data.data() + r * k;
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= z;
  }
  return p;
}

SceResult softmax_cross_entropy(const Tensor& logits, const Tensor& target) {
  check_logits(logits, "cross entropy");
  if (target.dims != logits.dims)
    throw std::invalid_argument("cross entropy: target shape " + target.shape_str() +
                                " != logits shape " + logits.shape_str());
  const std::size_t k = logits.dims.back();
  const std::size_t batch = logits.size() / k;
  for (std::size_t r = 0; r < batch; ++r) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += target.data[r * k + j];
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("cross entropy: target row " + std::to_string(r) +
                                  " sums to " + std::to_string(sum) + ", not 1");
  }

  SceResult out;
  out.grad = Tensor(logits.dims);
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* row = logits.data.data() + r * k;
    const double* t = target.data.data() + r * k;
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z) + mx;
    double* g = out.grad.data.data() + r * k;
    for (std::size_t j = 0; j < k; ++j) {
      total -= t[j] * (row[j] - logz);
      g[j] = (std::exp(row[j] - logz) - t[j]) / static_cast<double>(batch);
    }
  }
  out.loss = total / static_cast<double>(batch);
  return out;
}

}  // namespace ser::nn
