#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ser/rng.hpp"
#include "ser/tensor.hpp"

namespace ser::nn {

// Trainable tensor plus its gradient. `frozen` params keep their gradients
// forced to zero and are skipped by the optimizer.
struct Param {
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

struct ParamRef {
  std::string name;  // fully qualified, e.g. "stem.conv.W"
  Param* param;
};

struct BufferRef {
  std::string name;  // e.g. "stem.bn.running_mean"
  Tensor* tensor;
};

// A layer owns its parameters, caches whatever forward state its backward
// pass needs, and reports params/buffers under local names; the model
// prefixes them with the layer name.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual void init(Rng& rng) {}
  virtual Tensor forward(const Tensor& x, bool train) = 0;
  // Must follow a forward(); returns grad wrt the input and accumulates
  // parameter gradients.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<std::pair<std::string, Param*>> params() { return {}; }
  virtual std::vector<std::pair<std::string, Tensor*>> buffers() { return {}; }
  void zero_grads();
};

// y = x W + b.  x: [B, in] -> [B, out].
class Dense : public Layer {
 public:
  Dense(std::size_t in, std::size_t out);
  std::string kind() const override { return "dense"; }
  void init(Rng& rng) override;
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<std::pair<std::string, Param*>> params() override;

  Param w;  // [in, out]
  Param b;  // [out]

 private:
  std::size_t in_, out_;
  Tensor x_;
};

// Cross-correlation, square kernel, zero padding k/2, stride 1 or 2.
// x: [B, Cin, H, W] -> [B, Cout, OH, OW].  Implemented via im2col + GEMM.
class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t ksize, std::size_t stride);
  std::string kind() const override { return "conv"; }
  void init(Rng& rng) override;
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<std::pair<std::string, Param*>> params() override;

  Param w;  // [out_ch, in_ch, k, k]
  Param b;  // [out_ch]

 private:
  std::size_t in_ch_, out_ch_, k_, stride_, pad_;
  std::vector<std::size_t> in_dims_;
  Tensor cols_;  // [B*OH*OW, Cin*k*k]
};

// Normalizes over every axis except axis 1 (channels for 4-d input,
// features for 2-d input). Running stats use momentum 0.1 and drive the
// eval-mode forward, which is then a fixed affine map.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.1, double eps = 1e-5);
  std::string kind() const override { return "batchnorm"; }
  void init(Rng& rng) override;
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<std::pair<std::string, Param*>> params() override;
  std::vector<std::pair<std::string, Tensor*>> buffers() override;

  Param gamma, beta;
  Tensor running_mean, running_var;

 private:
  std::size_t c_;
  double momentum_, eps_;
  bool trained_forward_ = false;
  std::vector<std::size_t> in_dims_;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class ReLU : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<bool> mask_;
  std::vector<std::size_t> in_dims_;
};

// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
class MaxPool2 : public Layer {
 public:
  std::string kind() const override { return "maxpool2"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<std::size_t> in_dims_;
  std::vector<std::size_t> argmax_;
};

// [B, C, H, W] -> [B, C] spatial mean; makes the head resolution-agnostic.
class GlobalAvgPool : public Layer {
 public:
  std::string kind() const override { return "gap"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<std::size_t> in_dims_;
};

// Inverted dropout: active only in train mode, scales kept units by
// 1/(1-p) so eval needs no correction. Mask stream is seeded by the model.
class Dropout : public Layer {
 public:
  explicit Dropout(double p);
  std::string kind() const override { return "dropout"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  void seed(std::uint64_t s) { rng_ = Rng(s); }
  double p() const { return p_; }

 private:
  double p_;
  Rng rng_{0};
  std::vector<double> scale_;
  std::vector<std::size_t> in_dims_;
};

// One bidirectional LSTM layer. Input [B, T, D]; output [B, T, 2H] when
// return_seq, else the concatenated final hidden states of both
// directions, [B, 2H]. Gate order within the fused weights is i, f, g, o.
class BiLSTM : public Layer {
 public:
  BiLSTM(std::size_t input_dim, std::size_t hidden, bool return_seq);
  std::string kind() const override { return "bilstm"; }
  void init(Rng& rng) override;
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<std::pair<std::string, Param*>> params() override;

  struct Direction {
    Param wx;  // [D, 4H]
    Param wh;  // [H, 4H]
    Param b;   // [4H]
    // Per-timestep caches, each [B, H] (gates [B, 4H]).
    std::vector<Tensor> gates, c, tanh_c, h;
  };
  Direction fwd, bwd;

 private:
  Tensor run_direction(Direction& d, const Tensor& x, bool reverse);
  Tensor back_direction(Direction& d, const Tensor& x, const Tensor& grad_h,
                        bool reverse, bool seq_grad);

  std::size_t d_, h_;
  bool return_seq_;
  Tensor x_;
};

// conv-bn-relu-conv-bn plus the identity (1x1 projection when channels or
// stride change), then relu.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(std::size_t in_ch, std::size_t out_ch, std::size_t stride);
  std::string kind() const override { return "resblock"; }
  void init(Rng& rng) override;
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<std::pair<std::string, Param*>> params() override;
  std::vector<std::pair<std::string, Tensor*>> buffers() override;

 private:
  bool projected_;
  Conv2d conv1_, conv2_;
  BatchNorm bn1_, bn2_;
  ReLU relu1_;
  std::unique_ptr<Conv2d> proj_;
  std::vector<bool> out_mask_;  // final relu mask
  std::vector<std::size_t> out_dims_;
};

}  // namespace ser::nn
