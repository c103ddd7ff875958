#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ser/tensor.hpp"

namespace ser::svm {

inline constexpr std::uint32_t kSermVersion = 1;

// exp(-gamma * ||x - y||^2)
double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y, double gamma);
double rbf_kernel(const double* x, const double* y, std::size_t d, double gamma);

struct SvmBinary {
  Tensor support;             // [n_sv, d]; only alpha > 0 rows are kept
  std::vector<double> coeff;  // alpha_i * y_i per support vector
  double bias = 0.0;
  double gamma = 0.0;
  double c = 0.0;
  int pos_class = 0;  // decision >= 0 votes pos_class
  int neg_class = 0;

  double decision(const double* x, std::size_t d) const;
  double decision(const std::vector<double>& x) const;
};

struct SmoResult {
  SvmBinary model;
  std::vector<double> alphas;  // full dual vector including zeros (KKT checks)
};

// Simplified SMO: sweep over KKT violators, random (seeded) second index.
// X rows are examples, y is +/-1 with both labels present.
SmoResult smo_train_binary(const Tensor& x, const std::vector<int>& y, double c, double gamma,
                           double tol = 1e-3, std::size_t max_passes = 10,
                           std::uint64_t seed = 0);

struct SvmConfig {
  double c = 1.0;
  double gamma = 0.0;  // 0 -> 1/(d * var) measured on the standardized matrix
  double tol = 1e-3;
  std::size_t max_passes = 10;
  std::uint64_t seed = 0;
};

// One-vs-one multiclass: a binary model per unordered class pair, majority
// vote, ties to the lowest class code. Inputs are z-scored with train-split
// statistics stored in the model.
struct SvmMulti {
  std::vector<int> classes;      // ascending codes present at training time
  std::vector<SvmBinary> pairs;  // (classes[i], classes[j]) for i < j, in order
  std::vector<double> mean, stdev;
  double gamma = 0.0;
  double c = 0.0;
};

SvmMulti ovo_train(const Tensor& x, const std::vector<int>& labels, const SvmConfig& cfg = {});
int ovo_predict(const SvmMulti& m, const std::vector<double>& x);
std::vector<int> ovo_predict(const SvmMulti& m, const Tensor& x);

// Model file "SERM": magic, version u32, header length u32, JSON header
// (gamma, C, classes, standardization vectors, per-pair bias/class codes),
// then per pair two SERT blocks: support vectors and coefficients.
std::vector<std::uint8_t> save_svm(const SvmMulti& m);
SvmMulti load_svm(const std::vector<std::uint8_t>& bytes);
void save_svm_file(const SvmMulti& m, const std::string& path);
SvmMulti load_svm_file(const std::string& path);

}  // namespace ser::svm
