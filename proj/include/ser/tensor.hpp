#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace ser {

// Dense row-major n-d array of doubles. Doubles throughout: the gradient
// checks compare against central finite differences at h = 1e-5, which
// is meaningless in single precision. File formats store f32.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

  std::size_t size() const { return data.size(); }
  std::size_t ndim() const { return dims.size(); }
  bool empty() const { return data.empty(); }

  // 2-d accessors; only valid when ndim() == 2.
  std::size_t rows() const { return dims.at(0); }
  std::size_t cols() const { return dims.at(1); }
  double& operator()(std::size_t r, std::size_t c) { return data[r * dims[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * dims[1] + c]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& other) const { return dims == other.dims; }
  std::string shape_str() const;

  Tensor reshaped(std::vector<std::size_t> shape) const;
  void fill(double v);
  bool all_finite() const;
};

std::size_t numel(const std::vector<std::size_t>& dims);

// C = A * B                 A: [m,k]  B: [k,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// C = A * B^T               A: [m,k]  B: [n,k]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// C = A^T * B               A: [k,m]  B: [k,n]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// Accumulating raw kernels used by the layer backward paths.
void matmul_into(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_nt_into(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_tn_into(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate);

Tensor transpose(const Tensor& a);

}  // namespace ser
