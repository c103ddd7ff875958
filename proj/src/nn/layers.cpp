#include "ser/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace ser::nn {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_shape(const Tensor& got, const std::vector<std::size_t>& want, const char* who) {
  if (got.dims != want) {
    Tensor w;
    w.dims = want;
    throw std::invalid_argument(std::string(who) + ": expected " + w.shape_str() + ", got " +
                                got.shape_str());
  }
}

}  // namespace

void Layer::zero_grads() {
  for (auto& [name, p] : params()) p->grad.fill(0.0);
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
  if (in == 0 || out == 0) throw std::invalid_argument("dense: zero dimension");
  w.value = Tensor({in, out});
  w.grad = Tensor({in, out});
  b.value = Tensor({out});
  b.grad = Tensor({out});
}

void Dense::init(Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(in_));
  for (double& v : w.value.data) v = sd * rng.normal();
  b.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& x, bool) {
  if (x.ndim() != 2 || x.cols() != in_)
    throw std::invalid_argument("dense: want [B x " + std::to_string(in_) + "], got " +
                                x.shape_str());
  x_ = x;
  Tensor y = matmul(x, w.value);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < out_; ++c) y(r, c) += b.value[c];
  return y;
}

Tensor Dense::backward(const Tensor& gy) {
  if (x_.empty()) throw std::logic_error("dense: backward before forward");
  check_shape(gy, {x_.rows(), out_}, "dense backward");
  const std::size_t batch = x_.rows();
  matmul_tn_into(x_.data.data(), gy.data.data(), w.grad.data.data(), in_, batch, out_, true);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t c = 0; c < out_; ++c) b.grad[c] += gy(r, c);
  Tensor dx({batch, in_});
  matmul_nt_into(gy.data.data(), w.value.data.data(), dx.data.data(), batch, out_, in_, false);
  return dx;
}

std::vector<std::pair<std::string, Param*>> Dense::params() {
  return {{"W", &w}, {"b", &b}};
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t ksize, std::size_t stride)
    : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride), pad_(ksize / 2) {
  if (in_ch == 0 || out_ch == 0) throw std::invalid_argument("conv: zero channels");
  if (ksize != 1 && ksize != 3) throw std::invalid_argument("conv: kernel size must be 1 or 3");
  if (stride != 1 && stride != 2) throw std::invalid_argument("conv: stride must be 1 or 2");
  w.value = Tensor({out_ch, in_ch, ksize, ksize});
  w.grad = Tensor({out_ch, in_ch, ksize, ksize});
  b.value = Tensor({out_ch});
  b.grad = Tensor({out_ch});
}

void Conv2d::init(Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(in_ch_ * k_ * k_));
  for (double& v : w.value.data) v = sd * rng.normal();
  b.value.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x, bool) {
  if (x.ndim() != 4 || x.dims[1] != in_ch_)
    throw std::invalid_argument("conv: want [B x " + std::to_string(in_ch_) +
                                " x H x W], got " + x.shape_str());
  const std::size_t batch = x.dims[0], h = x.dims[2], wd = x.dims[3];
  if (h + 2 * pad_ < k_ || wd + 2 * pad_ < k_)
    throw std::invalid_argument("conv: input " + x.shape_str() + " smaller than kernel");
  const std::size_t oh = (h + 2 * pad_ - k_) / stride_ + 1;
  const std::size_t ow = (wd + 2 * pad_ - k_) / stride_ + 1;
  const std::size_t ckk = in_ch_ * k_ * k_;
  const std::size_t rows = batch * oh * ow;
  in_dims_ = x.dims;

  cols_ = Tensor({rows, ckk});
  double* col = cols_.data.data();
  const double* src = x.data.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double* row = col + ((bi * oh + i) * ow + j) * ckk;
        for (std::size_t c = 0; c < in_ch_; ++c) {
          const double* plane = src + (bi * in_ch_ + c) * h * wd;
          for (std::size_t di = 0; di < k_; ++di) {
            const long r = static_cast<long>(i * stride_ + di) - static_cast<long>(pad_);
            for (std::size_t dj = 0; dj < k_; ++dj) {
              const long cc = static_cast<long>(j * stride_ + dj) - static_cast<long>(pad_);
              const bool inside =
                  r >= 0 && cc >= 0 && r < static_cast<long>(h) && cc < static_cast<long>(wd);
              row[(c * k_ + di) * k_ + dj] = inside ? plane[r * wd + cc] : 0.0;
            }
          }
        }
      }
    }
  }

  std::vector<double> ymat(rows * out_ch_);
  matmul_nt_into(cols_.data.data(), w.value.data.data(), ymat.data(), rows, ckk, out_ch_, false);

  Tensor y({batch, out_ch_, oh, ow});
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t o = 0; o < out_ch_; ++o) {
      double* dst = y.data.data() + ((bi * out_ch_ + o) * oh) * ow;
      const double bias = b.value[o];
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j)
          dst[i * ow + j] = ymat[((bi * oh + i) * ow + j) * out_ch_ + o] + bias;
    }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  if (in_dims_.empty()) throw std::logic_error("conv: backward before forward");
  const std::size_t batch = in_dims_[0], h = in_dims_[2], wd = in_dims_[3];
  const std::size_t oh = (h + 2 * pad_ - k_) / stride_ + 1;
  const std::size_t ow = (wd + 2 * pad_ - k_) / stride_ + 1;
  check_shape(gy, {batch, out_ch_, oh, ow}, "conv backward");
  const std::size_t ckk = in_ch_ * k_ * k_;
  const std::size_t rows = batch * oh * ow;

  std::vector<double> gymat(rows * out_ch_);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t o = 0; o < out_ch_; ++o) {
      const double* src = gy.data.data() + ((bi * out_ch_ + o) * oh) * ow;
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j)
          gymat[((bi * oh + i) * ow + j) * out_ch_ + o] = src[i * ow + j];
    }

  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < out_ch_; ++o) b.grad[o] += gymat[r * out_ch_ + o];

  matmul_tn_into(gymat.data(), cols_.data.data(), w.grad.data.data(), out_ch_, rows, ckk, true);

  Tensor dcols({rows, ckk});
  matmul_into(gymat.data(), w.value.data.data(), dcols.data.data(), rows, out_ch_, ckk, false);

  Tensor dx(in_dims_);
  double* dst = dx.data.data();
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const double* row = dcols.data.data() + ((bi * oh + i) * ow + j) * ckk;
        for (std::size_t c = 0; c < in_ch_; ++c) {
          double* plane = dst + (bi * in_ch_ + c) * h * wd;
          for (std::size_t di = 0; di < k_; ++di) {
            const long r = static_cast<long>(i * stride_ + di) - static_cast<long>(pad_);
            if (r < 0 || r >= static_cast<long>(h)) continue;
            for (std::size_t dj = 0; dj < k_; ++dj) {
              const long cc = static_cast<long>(j * stride_ + dj) - static_cast<long>(pad_);
              if (cc < 0 || cc >= static_cast<long>(wd)) continue;
              plane[r * wd + cc] += row[(c * k_ + di) * k_ + dj];
            }
          }
        }
      }
    }
  }
  return dx;
}

std::vector<std::pair<std::string, Param*>> Conv2d::params() {
  return {{"W", &w}, {"b", &b}};
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double momentum, double eps)
    : c_(channels), momentum_(momentum), eps_(eps) {
  if (channels == 0) throw std::invalid_argument("batchnorm: zero channels");
  gamma.value = Tensor({channels});
  gamma.grad = Tensor({channels});
  beta.value = Tensor({channels});
  beta.grad = Tensor({channels});
  gamma.value.fill(1.0);
  running_mean = Tensor({channels});
  running_var = Tensor({channels});
  running_var.fill(1.0);
}

void BatchNorm::init(Rng&) {
  gamma.value.fill(1.0);
  beta.value.fill(0.0);
}

Tensor BatchNorm::forward(const Tensor& x, bool train) {
  if ((x.ndim() != 2 && x.ndim() != 4) || x.dims[1] != c_)
    throw std::invalid_argument("batchnorm: want channel axis " + std::to_string(c_) +
                                ", got " + x.shape_str());
  const std::size_t batch = x.dims[0];
  const std::size_t spatial = x.ndim() == 4 ? x.dims[2] * x.dims[3] : 1;
  const std::size_t n = batch * spatial;
  in_dims_ = x.dims;
  // A frozen batchnorm behaves like inference even inside a train step:
  // batch stats are not used and the running buffers stay untouched.
  if (gamma.frozen && beta.frozen) train = false;
  trained_forward_ = train;
  inv_std_.assign(c_, 0.0);
  xhat_ = Tensor(x.dims);

  std::vector<double> mean(c_, 0.0), var(c_, 0.0);
  if (train) {
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t c = 0; c < c_; ++c) {
        const double* src = x.data.data() + (bi * c_ + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) mean[c] += src[s];
      }
    for (std::size_t c = 0; c < c_; ++c) mean[c] /= static_cast<double>(n);
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t c = 0; c < c_; ++c) {
        const double* src = x.data.data() + (bi * c_ + c) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
          const double d = src[s] - mean[c];
          var[c] += d * d;
        }
      }
    for (std::size_t c = 0; c < c_; ++c) {
      var[c] /= static_cast<double>(n);
      running_mean[c] = (1.0 - momentum_) * running_mean[c] + momentum_ * mean[c];
      running_var[c] = (1.0 - momentum_) * running_var[c] + momentum_ * var[c];
    }
  } else {
    for (std::size_t c = 0; c < c_; ++c) {
      mean[c] = running_mean[c];
      var[c] = running_var[c];
    }
  }

  Tensor y(x.dims);
  for (std::size_t c = 0; c < c_; ++c) inv_std_[c] = 1.0 / std::sqrt(var[c] + eps_);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t c = 0; c < c_; ++c) {
      const double* src = x.data.data() + (bi * c_ + c) * spatial;
      double* xh = xhat_.data.data() + (bi * c_ + c) * spatial;
      double* dst = y.data.data() + (bi * c_ + c) * spatial;
      const double m = mean[c], is = inv_std_[c], g = gamma.value[c], bt = beta.value[c];
      for (std::size_t s = 0; s < spatial; ++s) {
        xh[s] = (src[s] - m) * is;
        dst[s] = g * xh[s] + bt;
      }
    }
  return y;
}

Tensor BatchNorm::backward(const Tensor& gy) {
  if (in_dims_.empty()) throw std::logic_error("batchnorm: backward before forward");
  check_shape(gy, in_dims_, "batchnorm backward");
  const std::size_t batch = in_dims_[0];
  const std::size_t spatial = in_dims_.size() == 4 ? in_dims_[2] * in_dims_[3] : 1;
  const double n = static_cast<double>(batch * spatial);

  std::vector<double> sum_gy(c_, 0.0), sum_gy_xhat(c_, 0.0);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t c = 0; c < c_; ++c) {
      const double* g = gy.data.data() + (bi * c_ + c) * spatial;
      const double* xh = xhat_.data.data() + (bi * c_ + c) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        sum_gy[c] += g[s];
        sum_gy_xhat[c] += g[s] * xh[s];
      }
    }
  for (std::size_t c = 0; c < c_; ++c) {
    gamma.grad[c] += sum_gy_xhat[c];
    beta.grad[c] += sum_gy[c];
  }

  Tensor dx(in_dims_);
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t c = 0; c < c_; ++c) {
      const double* g = gy.data.data() + (bi * c_ + c) * spatial;
      const double* xh = xhat_.data.data() + (bi * c_ + c) * spatial;
      double* dst = dx.data.data() + (bi * c_ + c) * spatial;
      const double scale = gamma.value[c] * inv_std_[c];
      if (trained_forward_) {
        const double mg = sum_gy[c] / n, mgx = sum_gy_xhat[c] / n;
        for (std::size_t s = 0; s < spatial; ++s)
          dst[s] = scale * (g[s] - mg - xh[s] * mgx);
      } else {
        for (std::size_t s = 0; s < spatial; ++s) dst[s] = scale * g[s];
      }
    }
  return dx;
}

std::vector<std::pair<std::string, Param*>> BatchNorm::params() {
  return {{"gamma", &gamma}, {"beta", &beta}};
}

std::vector<std::pair<std::string, Tensor*>> BatchNorm::buffers() {
  return {{"running_mean", &running_mean}, {"running_var", &running_var}};
}

// ------------------------------------------------------------------ ReLU

Tensor ReLU::forward(const Tensor& x, bool) {
  in_dims_ = x.dims;
  mask_.assign(x.size(), false);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0)
      mask_[i] = true;
    else
      y[i] = 0.0;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  if (in_dims_.empty()) throw std::logic_error("relu: backward before forward");
  check_shape(gy, in_dims_, "relu backward");
  Tensor dx = gy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!mask_[i]) dx[i] = 0.0;
  return dx;
}

// -------------------------------------------------------------- MaxPool2

Tensor MaxPool2::forward(const Tensor& x, bool) {
  if (x.ndim() != 4) throw std::invalid_argument("maxpool2: want 4-d, got " + x.shape_str());
  const std::size_t batch = x.dims[0], ch = x.dims[1], h = x.dims[2], wd = x.dims[3];
  const std::size_t oh = h / 2, ow = wd / 2;
  if (oh == 0 || ow == 0)
    throw std::invalid_argument("maxpool2: input " + x.shape_str() + " too small");
  in_dims_ = x.dims;

  Tensor y({batch, ch, oh, ow});
  argmax_.assign(y.size(), 0);
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    const double* plane = x.data.data() + bc * h * wd;
    double* dst = y.data.data() + bc * oh * ow;
    std::size_t* am = argmax_.data() + bc * oh * ow;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (2 * i) * wd + 2 * j;
        double bv = plane[best];
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (2 * i + di) * wd + (2 * j + dj);
            if (plane[idx] > bv) {
              bv = plane[idx];
              best = idx;
            }
          }
        dst[i * ow + j] = bv;
        am[i * ow + j] = bc * h * wd + best;
      }
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& gy) {
  if (in_dims_.empty()) throw std::logic_error("maxpool2: backward before forward");
  check_shape(gy, {in_dims_[0], in_dims_[1], in_dims_[2] / 2, in_dims_[3] / 2},
              "maxpool2 backward");
  Tensor dx(in_dims_);
  for (std::size_t i = 0; i < gy.size(); ++i) dx[argmax_[i]] += gy[i];
  return dx;
}

// --------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, bool) {
  if (x.ndim() != 4) throw std::invalid_argument("gap: want 4-d, got " + x.shape_str());
  in_dims_ = x.dims;
  const std::size_t batch = x.dims[0], ch = x.dims[1], spatial = x.dims[2] * x.dims[3];
  Tensor y({batch, ch});
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    const double* plane = x.data.data() + bc * spatial;
    double acc = 0.0;
    for (std::size_t s = 0; s < spatial; ++s) acc += plane[s];
    y[bc] = acc / static_cast<double>(spatial);
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy) {
  if (in_dims_.empty()) throw std::logic_error("gap: backward before forward");
  check_shape(gy, {in_dims_[0], in_dims_[1]}, "gap backward");
  const std::size_t spatial = in_dims_[2] * in_dims_[3];
  Tensor dx(in_dims_);
  for (std::size_t bc = 0; bc < gy.size(); ++bc) {
    const double g = gy[bc] / static_cast<double>(spatial);
    double* plane = dx.data.data() + bc * spatial;
    for (std::size_t s = 0; s < spatial; ++s) plane[s] = g;
  }
  return dx;
}

// --------------------------------------------------------------- Dropout

Dropout::Dropout(double p) : p_(p) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, bool train) {
  in_dims_ = x.dims;
  scale_.assign(x.size(), 1.0);
  if (!train || p_ == 0.0) return x;
  const double keep = 1.0 / (1.0 - p_);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    scale_[i] = rng_.uniform() >= p_ ? keep : 0.0;
    y[i] *= scale_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& gy) {
  if (in_dims_.empty()) throw std::logic_error("dropout: backward before forward");
  check_shape(gy, in_dims_, "dropout backward");
  Tensor dx = gy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= scale_[i];
  return dx;
}

// ---------------------------------------------------------------- BiLSTM

BiLSTM::BiLSTM(std::size_t input_dim, std::size_t hidden, bool return_seq)
    : d_(input_dim), h_(hidden), return_seq_(return_seq) {
  if (input_dim == 0 || hidden == 0) throw std::invalid_argument("bilstm: zero dimension");
  for (Direction* dir : {&fwd, &bwd}) {
    dir->wx.value = Tensor({d_, 4 * h_});
    dir->wx.grad = Tensor({d_, 4 * h_});
    dir->wh.value = Tensor({h_, 4 * h_});
    dir->wh.grad = Tensor({h_, 4 * h_});
    dir->b.value = Tensor({4 * h_});
    dir->b.grad = Tensor({4 * h_});
  }
}

void BiLSTM::init(Rng& rng) {
  const double bx = 1.0 / std::sqrt(static_cast<double>(d_));
  const double bh = 1.0 / std::sqrt(static_cast<double>(h_));
  for (Direction* dir : {&fwd, &bwd}) {
    for (double& v : dir->wx.value.data) v = rng.uniform(-bx, bx);
    for (double& v : dir->wh.value.data) v = rng.uniform(-bh, bh);
    dir->b.value.fill(0.0);
    // Forget-gate bias 1: keeps early-training memory alive over long clips.
    for (std::size_t i = h_; i < 2 * h_; ++i) dir->b.value[i] = 1.0;
  }
}

Tensor BiLSTM::run_direction(Direction& d, const Tensor& x, bool reverse) {
  const std::size_t batch = x.dims[0], t_len = x.dims[1];
  const std::size_t g4 = 4 * h_;
  d.gates.assign(t_len, Tensor());
  d.c.assign(t_len, Tensor());
  d.tanh_c.assign(t_len, Tensor());
  d.h.assign(t_len, Tensor());

  // Input contribution for all timesteps in one GEMM.
  Tensor xw({batch * t_len, g4});
  matmul_into(x.data.data(), d.wx.value.data.data(), xw.data.data(), batch * t_len, d_, g4,
              false);

  Tensor h_prev({batch, h_}), c_prev({batch, h_});
  for (std::size_t step = 0; step < t_len; ++step) {
    const std::size_t t = reverse ? t_len - 1 - step : step;
    Tensor gates({batch, g4});
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* xrow = xw.data.data() + (bi * t_len + t) * g4;
      double* grow = gates.data.data() + bi * g4;
      for (std::size_t j = 0; j < g4; ++j) grow[j] = xrow[j] + d.b.value[j];
    }
    if (step > 0)
      matmul_into(h_prev.data.data(), d.wh.value.data.data(), gates.data.data(), batch, h_,
                  g4, true);

    Tensor c({batch, h_}), tc({batch, h_}), hh({batch, h_});
    for (std::size_t bi = 0; bi < batch; ++bi) {
      double* g = gates.data.data() + bi * g4;
      for (std::size_t j = 0; j < h_; ++j) {
        const double gi = sigmoid(g[j]);
        const double gf = sigmoid(g[h_ + j]);
        const double gg = std::tanh(g[2 * h_ + j]);
        const double go = sigmoid(g[3 * h_ + j]);
        g[j] = gi;
        g[h_ + j] = gf;
        g[2 * h_ + j] = gg;
        g[3 * h_ + j] = go;
        const double cv = gf * c_prev(bi, j) + gi * gg;
        c(bi, j) = cv;
        tc(bi, j) = std::tanh(cv);
        hh(bi, j) = go * tc(bi, j);
      }
    }
    d.gates[t] = std::move(gates);
    d.c[t] = c;
    d.tanh_c[t] = std::move(tc);
    d.h[t] = hh;
    h_prev = std::move(hh);
    c_prev = std::move(c);
  }
  return h_prev;  // final hidden state of this direction
}

Tensor BiLSTM::forward(const Tensor& x, bool) {
  if (x.ndim() != 3 || x.dims[2] != d_)
    throw std::invalid_argument("bilstm: want [B x T x " + std::to_string(d_) + "], got " +
                                x.shape_str());
  if (x.dims[1] == 0) throw std::invalid_argument("bilstm: empty sequence");
  x_ = x;
  const std::size_t batch = x.dims[0], t_len = x.dims[1];
  Tensor hf = run_direction(fwd, x, false);
  Tensor hb = run_direction(bwd, x, true);

  if (!return_seq_) {
    Tensor y({batch, 2 * h_});
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t j = 0; j < h_; ++j) {
        y(bi, j) = hf(bi, j);
        y(bi, h_ + j) = hb(bi, j);
      }
    return y;
  }
  Tensor y({batch, t_len, 2 * h_});
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t t = 0; t < t_len; ++t) {
      double* row = y.data.data() + (bi * t_len + t) * 2 * h_;
      for (std::size_t j = 0; j < h_; ++j) {
        row[j] = fwd.h[t](bi, j);
        row[h_ + j] = bwd.h[t](bi, j);
      }
    }
  return y;
}

// grad_h: when seq_grad it is [B, T, H] (this direction's half of the output
// gradient); otherwise [B, H] applied at the direction's last processed step.
Tensor BiLSTM::back_direction(Direction& d, const Tensor& x, const Tensor& grad_h,
                              bool reverse, bool seq_grad) {
  const std::size_t batch = x.dims[0], t_len = x.dims[1];
  const std::size_t g4 = 4 * h_;

  Tensor dxw({batch * t_len, g4});
  Tensor dh_next({batch, h_}), dc_next({batch, h_});

  for (std::size_t step = t_len; step-- > 0;) {
    const std::size_t t = reverse ? t_len - 1 - step : step;
    const bool first_step = step == 0;
    const std::size_t prev_t = reverse ? t + 1 : t - 1;  // valid unless first_step

    Tensor dz({batch, g4});
    Tensor dc({batch, h_});
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* g = d.gates[t].data.data() + bi * g4;
      for (std::size_t j = 0; j < h_; ++j) {
        double dh = dh_next(bi, j);
        if (seq_grad)
          dh += grad_h.data[(bi * t_len + t) * h_ + j];
        else if (step + 1 == t_len)
          dh += grad_h(bi, j);
        const double gi = g[j], gf = g[h_ + j], gg = g[2 * h_ + j], go = g[3 * h_ + j];
        const double tc = d.tanh_c[t](bi, j);
        const double dcv = dc_next(bi, j) + dh * go * (1.0 - tc * tc);
        const double c_prev = first_step ? 0.0 : d.c[prev_t](bi, j);
        const double d_o = dh * tc;
        const double d_i = dcv * gg;
        const double d_f = dcv * c_prev;
        const double d_g = dcv * gi;
        dz(bi, j) = d_i * gi * (1.0 - gi);
        dz(bi, h_ + j) = d_f * gf * (1.0 - gf);
        dz(bi, 2 * h_ + j) = d_g * (1.0 - gg * gg);
        dz(bi, 3 * h_ + j) = d_o * go * (1.0 - go);
        dc(bi, j) = dcv * gf;
      }
    }

    for (std::size_t bi = 0; bi < batch; ++bi) {
      const double* zrow = dz.data.data() + bi * g4;
      double* xrow = dxw.data.data() + (bi * t_len + t) * g4;
      for (std::size_t j = 0; j < g4; ++j) {
        xrow[j] = zrow[j];
        d.b.grad[j] += zrow[j];
      }
    }
    if (!first_step) {
      matmul_tn_into(d.h[prev_t].data.data(), dz.data.data(), d.wh.grad.data.data(), h_,
                     batch, g4, true);
      matmul_nt_into(dz.data.data(), d.wh.value.data.data(), dh_next.data.data(), batch, g4,
                     h_, false);
    }
    dc_next = std::move(dc);
  }

  matmul_tn_into(x.data.data(), dxw.data.data(), d.wx.grad.data.data(), d_, batch * t_len, g4,
                 true);
  Tensor dx({batch, t_len, d_});
  matmul_nt_into(dxw.data.data(), d.wx.value.data.data(), dx.data.data(), batch * t_len, g4,
                 d_, false);
  return dx;
}

Tensor BiLSTM::backward(const Tensor& gy) {
  if (x_.empty()) throw std::logic_error("bilstm: backward before forward");
  const std::size_t batch = x_.dims[0], t_len = x_.dims[1];
  Tensor gf, gb;
  if (return_seq_) {
    check_shape(gy, {batch, t_len, 2 * h_}, "bilstm backward");
    gf = Tensor({batch, t_len, h_});
    gb = Tensor({batch, t_len, h_});
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t t = 0; t < t_len; ++t) {
        const double* row = gy.data.data() + (bi * t_len + t) * 2 * h_;
        for (std::size_t j = 0; j < h_; ++j) {
          gf.data[(bi * t_len + t) * h_ + j] = row[j];
          gb.data[(bi * t_len + t) * h_ + j] = row[h_ + j];
        }
      }
  } else {
    check_shape(gy, {batch, 2 * h_}, "bilstm backward");
    gf = Tensor({batch, h_});
    gb = Tensor({batch, h_});
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t j = 0; j < h_; ++j) {
        gf(bi, j) = gy(bi, j);
        gb(bi, j) = gy(bi, h_ + j);
      }
  }
  Tensor dx = back_direction(fwd, x_, gf, false, return_seq_);
  Tensor dxb = back_direction(bwd, x_, gb, true, return_seq_);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxb[i];
  return dx;
}

std::vector<std::pair<std::string, Param*>> BiLSTM::params() {
  return {{"fwd.Wx", &fwd.wx}, {"fwd.Wh", &fwd.wh}, {"fwd.b", &fwd.b},
          {"bwd.Wx", &bwd.wx}, {"bwd.Wh", &bwd.wh}, {"bwd.b", &bwd.b}};
}

// --------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(std::size_t in_ch, std::size_t out_ch, std::size_t stride)
    : projected_(in_ch != out_ch || stride != 1),
      conv1_(in_ch, out_ch, 3, stride),
      conv2_(out_ch, out_ch, 3, 1),
      bn1_(out_ch),
      bn2_(out_ch),
      proj_(projected_ ? std::make_unique<Conv2d>(in_ch, out_ch, 1, stride) : nullptr) {}

void ResidualBlock::init(Rng& rng) {
  conv1_.init(rng);
  bn1_.init(rng);
  conv2_.init(rng);
  bn2_.init(rng);
  if (proj_) proj_->init(rng);
}

Tensor ResidualBlock::forward(const Tensor& x, bool train) {
  Tensor main = conv1_.forward(x, train);
  main = bn1_.forward(main, train);
  main = relu1_.forward(main, train);
  main = conv2_.forward(main, train);
  main = bn2_.forward(main, train);
  Tensor skip = proj_ ? proj_->forward(x, train) : x;
  if (!main.same_shape(skip))
    throw std::logic_error("resblock: path shapes diverged " + main.shape_str() + " vs " +
                           skip.shape_str());
  out_dims_ = main.dims;
  out_mask_.assign(main.size(), false);
  Tensor y(main.dims);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = main[i] + skip[i];
    if (v > 0.0) {
      y[i] = v;
      out_mask_[i] = true;
    }
  }
  return y;
}

Tensor ResidualBlock::backward(const Tensor& gy) {
  if (out_dims_.empty()) throw std::logic_error("resblock: backward before forward");
  check_shape(gy, out_dims_, "resblock backward");
  Tensor g = gy;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!out_mask_[i]) g[i] = 0.0;

  Tensor dmain = bn2_.backward(g);
  dmain = conv2_.backward(dmain);
  dmain = relu1_.backward(dmain);
  dmain = bn1_.backward(dmain);
  dmain = conv1_.backward(dmain);

  Tensor dskip = proj_ ? proj_->backward(g) : g;
  for (std::size_t i = 0; i < dmain.size(); ++i) dmain[i] += dskip[i];
  return dmain;
}

namespace {

void append_prefixed(std::vector<std::pair<std::string, Param*>>& out, const std::string& pre,
                     Layer& layer) {
  for (auto& [name, p] : layer.params()) out.emplace_back(pre + name, p);
}

}  // namespace

std::vector<std::pair<std::string, Param*>> ResidualBlock::params() {
  std::vector<std::pair<std::string, Param*>> out;
  append_prefixed(out, "conv1.", conv1_);
  append_prefixed(out, "bn1.", bn1_);
  append_prefixed(out, "conv2.", conv2_);
  append_prefixed(out, "bn2.", bn2_);
  if (proj_) append_prefixed(out, "proj.", *proj_);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> ResidualBlock::buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& [name, t] : bn1_.buffers()) out.emplace_back("bn1." + name, t);
  for (auto& [name, t] : bn2_.buffers()) out.emplace_back("bn2." + name, t);
  return out;
}

}  // namespace ser::nn
