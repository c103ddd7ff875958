#include "ser/tensor.hpp"

#include <cmath>
#include <cstring>

namespace ser {

std::size_t numel(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : dims(std::move(shape)), data(numel(dims), 0.0) {}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (numel(shape) != size())
    throw std::invalid_argument("reshape: element count mismatch " + shape_str());
  Tensor out;
  out.dims = std::move(shape);
  out.data = data;
  return out;
}

void Tensor::fill(double v) {
  for (double& x : data) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

// (i,k,j) saxpy order: the j loop runs over contiguous rows of B and C.
void matmul_into(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_into(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

void matmul_tn_into(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

namespace {

void check_2d(const Tensor& t, const char* who) {
  if (t.ndim() != 2) throw std::invalid_argument(std::string(who) + ": expected 2-d tensor, got " + t.shape_str());
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dims " + a.shape_str() + " vs " + b.shape_str());
  Tensor c({a.rows(), b.cols()});
  matmul_into(a.data.data(), b.data.data(), c.data.data(), a.rows(), a.cols(), b.cols(), false);
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul_nt");
  check_2d(b, "matmul_nt");
  if (a.cols() != b.cols())
    throw std::invalid_argument("matmul_nt: inner dims " + a.shape_str() + " vs " + b.shape_str());
  Tensor c({a.rows(), b.rows()});
  matmul_nt_into(a.data.data(), b.data.data(), c.data.data(), a.rows(), a.cols(), b.rows(), false);
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul_tn");
  check_2d(b, "matmul_tn");
  if (a.rows() != b.rows())
    throw std::invalid_argument("matmul_tn: inner dims " + a.shape_str() + " vs " + b.shape_str());
  Tensor c({a.cols(), b.cols()});
  matmul_tn_into(a.data.data(), b.data.data(), c.data.data(), a.cols(), a.rows(), b.cols(), false);
  return c;
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  Tensor t({a.cols(), a.rows()});
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

}  // namespace ser
