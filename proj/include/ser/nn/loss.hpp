#pragma once

#include "ser/tensor.hpp"

namespace ser::nn {

// Row-wise softmax; accepts [K] or [B, K].
Tensor softmax(const Tensor& logits);

struct SceResult {
  double loss = 0.0;  // mean over the batch
  Tensor grad;        // (softmax - target) / batch, same shape as logits
};

// Cross entropy against soft labels with log-sum-exp stabilization. Each
// target row must sum to 1 within 1e-6 (one-hot or mixup-blended labels).
SceResult softmax_cross_entropy(const Tensor& logits, const Tensor& target);

}  // namespace ser::nn
