#pragma once

// Test-side reference implementations, kept deliberately naive and
// independent of the library's fast paths.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "ser/nn/layers.hpp"
#include "ser/nn/model.hpp"
#include "ser/rng.hpp"
#include "ser/tensor.hpp"

namespace oracle {

// ------------------------------------------------------------------ DFT ----

inline std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = sign * 2.0 * std::numbers::pi *
                         static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

// --------------------------------------------------- finite differences ----

inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-4});
  return std::fabs(a - b) / denom;
}

struct FdReport {
  double max_rel = 0.0;
  std::string worst;
};

// Random fixed weights so the scalar objective sum(w .* y) exercises every
// output element.
inline ser::Tensor loss_weights(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  ser::Tensor w(dims);
  ser::Rng rng(seed);
  for (auto& v : w.data) v = rng.uniform(-1.0, 1.0);
  return w;
}

inline double weighted_sum(const ser::Tensor& y, const ser::Tensor& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * w.data[i];
  return acc;
}

// Normal draws nudged away from zero so relu/abs kinks stay > margin from
// the finite-difference probes.
inline ser::Tensor kink_free_input(std::vector<std::size_t> dims, std::uint64_t seed,
                                   double margin = 0.2) {
  ser::Tensor x(std::move(dims));
  ser::Rng rng(seed);
  for (auto& v : x.data) {
    v = rng.normal();
    if (std::fabs(v) < margin) v += v < 0 ? -margin : margin;
  }
  return x;
}

// Shuffled multiples of 0.01: pairwise gaps >= 0.01, so pooling argmaxes are
// stable under the probe step.
inline ser::Tensor distinct_grid_input(std::vector<std::size_t> dims, std::uint64_t seed) {
  ser::Tensor x(std::move(dims));
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  ser::Rng rng(seed);
  rng.shuffle(order);
  for (std::size_t i = 0; i < x.size(); ++i)
    x.data[i] = 0.01 * static_cast<double>(order[i] + 1);
  return x;
}

// Central-difference check of layer.backward against a weighted-sum scalar
// objective, wiggling the input and every parameter. `pre` runs before each
// forward (to reseed dropout and the like).
inline FdReport fd_check_layer(ser::nn::Layer& layer, const ser::Tensor& x0,
                               std::uint64_t seed, bool train = true,
                               const std::function<void()>& pre = {},
                               double h = 1e-5) {
  ser::Tensor x = x0;
  auto fwd = [&]() {
    if (pre) pre();
    return layer.forward(x, train);
  };
  ser::Tensor y = fwd();
  ser::Tensor w = loss_weights(y.dims, ser::derive_seed(seed, "loss-w"));

  layer.zero_grads();
  ser::Tensor dx = layer.backward(w);
  auto prefs = layer.params();
  std::vector<ser::Tensor> analytic;
  analytic.reserve(prefs.size());
  for (auto& pr : prefs) analytic.push_back(pr.second->grad);

  FdReport rep;
  auto consider = [&](double a, double f, const std::string& what) {
    const double e = rel_err(a, f);
    if (e > rep.max_rel) {
      rep.max_rel = e;
      rep.worst = what;
    }
  };
  auto probe = [&](double& slot) {
    const double keep = slot;
    slot = keep + h;
    const double up = weighted_sum(fwd(), w);
    slot = keep - h;
    const double dn = weighted_sum(fwd(), w);
    slot = keep;
    return (up - dn) / (2.0 * h);
  };

  for (std::size_t i = 0; i < x.size(); ++i)
    consider(dx.data[i], probe(x.data[i]), "dx[" + std::to_string(i) + "]");
  for (std::size_t p = 0; p < prefs.size(); ++p) {
    ser::Tensor& val = prefs[p].second->value;
    for (std::size_t i = 0; i < val.size(); ++i)
      consider(analytic[p].data[i], probe(val.data[i]),
               prefs[p].first + "[" + std::to_string(i) + "]");
  }
  return rep;
}

// Same check through a whole Model.
inline FdReport fd_check_model(ser::nn::Model& model, const ser::Tensor& x0,
                               std::uint64_t seed, double h = 1e-5) {
  ser::Tensor x = x0;
  auto fwd = [&]() { return model.forward(x, true); };
  ser::Tensor y = fwd();
  ser::Tensor w = loss_weights(y.dims, ser::derive_seed(seed, "loss-w"));

  model.zero_grads();
  model.backward(w);
  auto prefs = model.params();
  std::vector<ser::Tensor> analytic;
  analytic.reserve(prefs.size());
  for (auto& pr : prefs) analytic.push_back(pr.param->grad);

  FdReport rep;
  auto consider = [&](double a, double f, const std::string& what) {
    const double e = rel_err(a, f);
    if (e > rep.max_rel) {
      rep.max_rel = e;
      rep.worst = what;
    }
  };
  auto probe = [&](double& slot) {
    const double keep = slot;
    slot = keep + h;
    const double up = weighted_sum(fwd(), w);
    slot = keep - h;
    const double dn = weighted_sum(fwd(), w);
    slot = keep;
    return (up - dn) / (2.0 * h);
  };
  for (std::size_t p = 0; p < prefs.size(); ++p) {
    ser::Tensor& val = prefs[p].param->value;
    for (std::size_t i = 0; i < val.size(); ++i)
      consider(analytic[p].data[i], probe(val.data[i]),
               prefs[p].name + "[" + std::to_string(i) + "]");
  }
  return rep;
}

// ------------------------------------------------------------- dual QP ----

inline double dual_objective(const ser::Tensor& k, const std::vector<int>& y,
                             const std::vector<double>& a) {
  const std::size_t n = y.size();
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) obj += a[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      obj -= 0.5 * a[i] * a[j] * y[i] * y[j] * k(i, j);
  return obj;
}

// Exhaustive grid maximization of the SVM dual for tiny problems: each
// alpha_i ranges over {0, C/g, ..., C}; the equality constraint is enforced
// exactly on the integer grid.
inline std::vector<double> dual_grid_solve(const ser::Tensor& k, const std::vector<int>& y,
                                           double c, int grid = 40) {
  const std::size_t n = y.size();
  std::vector<int> idx(n, 0);
  std::vector<double> best(n, 0.0);
  double best_obj = -1e300;
  for (;;) {
    long balance = 0;
    for (std::size_t i = 0; i < n; ++i) balance += y[i] * idx[i];
    if (balance == 0) {
      std::vector<double> a(n);
      for (std::size_t i = 0; i < n; ++i)
        a[i] = c * static_cast<double>(idx[i]) / static_cast<double>(grid);
      const double obj = dual_objective(k, y, a);
      if (obj > best_obj) {
        best_obj = obj;
        best = a;
      }
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] > grid) {
      idx[d] = 0;
      ++d;
    }
    if (d == n) break;
  }
  return best;
}

// Bias from KKT: average over free vectors, else the midpoint of the
// feasible interval.
inline double bias_from_alphas(const ser::Tensor& k, const std::vector<int>& y,
                               const std::vector<double>& a, double c) {
  const std::size_t n = y.size();
  auto margin = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] * y[j] * k(j, i);
    return s;
  };
  double sum = 0.0;
  int free_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] > 1e-9 && a[i] < c - 1e-9) {
      sum += y[i] - margin(i);
      ++free_count;
    }
  }
  if (free_count > 0) return sum / free_count;
  double lo = -1e300, hi = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = y[i] - margin(i);
    if ((y[i] == 1 && a[i] < 1e-9) || (y[i] == -1 && a[i] > c - 1e-9))
      hi = std::min(hi, v);
    else
      lo = std::max(lo, v);
  }
  if (lo > hi) return 0.0;
  return 0.5 * (lo + hi);
}

// ------------------------------------------------------------ mean/var ----

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace oracle
