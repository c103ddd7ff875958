#include "ser/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ser/rng.hpp"
#include "ser/sert.hpp"

namespace ser::svm {

double rbf_kernel(const double* x, const double* y, std::size_t d, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = x[i] - y[i];
    s += diff * diff;
  }
  return std::exp(-gamma * s);
}

double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y, double gamma) {
  if (x.size() != y.size())
    throw std::invalid_argument("rbf kernel: dim mismatch " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  if (!(gamma > 0.0)) throw std::invalid_argument("rbf kernel: gamma must be > 0");
  return rbf_kernel(x.data(), y.data(), x.size(), gamma);
}

double SvmBinary::decision(const double* x, std::size_t d) const {
  if (d != (support.ndim() == 2 ? support.cols() : 0))
    throw std::invalid_argument("svm decision: feature dim mismatch");
  double f = bias;
  for (std::size_t i = 0; i < support.rows(); ++i)
    f += coeff[i] * rbf_kernel(support.data.data() + i * d, x, d, gamma);
  return f;
}

double SvmBinary::decision(const std::vector<double>& x) const {
  return decision(x.data(), x.size());
}

SmoResult smo_train_binary(const Tensor& x, const std::vector<int>& y, double c, double gamma,
                           double tol, std::size_t max_passes, std::uint64_t seed) {
  if (x.ndim() != 2) throw std::invalid_argument("svm: features must be [n x d]");
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw std::invalid_argument("svm: need at least 2 examples");
  if (y.size() != n) throw std::invalid_argument("svm: label count mismatch");
  if (!(c > 0.0)) throw std::invalid_argument("svm: C must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("svm: gamma must be > 0");
  if (!x.all_finite()) throw std::invalid_argument("svm: non-finite feature values");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1)
      pos = true;
    else if (v == -1)
      neg = true;
    else
      throw std::invalid_argument("svm: labels must be +1/-1");
  }
  if (!pos || !neg) throw std::invalid_argument("svm: single-class input");

  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double k = rbf_kernel(x.data.data() + i * d, x.data.data() + j * d, d, gamma);
      kmat[i * n + j] = k;
      kmat[j * n + i] = k;
    }

  std::vector<double> alpha(n, 0.0);
  double b = 0.0;
  auto fx = [&](std::size_t i) {
    double s = b;
    for (std::size_t j = 0; j < n; ++j)
      if (alpha[j] > 0.0) s += alpha[j] * y[j] * kmat[j * n + i];
    return s;
  };

  Rng rng(seed);
  std::size_t quiet_passes = 0;
  // Generous hard cap so a pathological dataset cannot spin forever.
  for (std::size_t sweep = 0; quiet_passes < max_passes && sweep < 100000; ++sweep) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei = fx(i) - y[i];
      const bool violates = (y[i] * ei < -tol && alpha[i] < c) || (y[i] * ei > tol && alpha[i] > 0.0);
      if (!violates) continue;

      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      const double ej = fx(j) - y[j];
      const double ai_old = alpha[i], aj_old = alpha[j];

      double lo, hi;
      if (y[i] != y[j]) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(c, c + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - c);
        hi = std::min(c, ai_old + aj_old);
      }
      if (lo >= hi) continue;

      const double eta = 2.0 * kmat[i * n + j] - kmat[i * n + i] - kmat[j * n + j];
      if (eta >= 0.0) continue;

      double aj = aj_old - y[j] * (ei - ej) / eta;
      aj = std::clamp(aj, lo, hi);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      const double ai = ai_old + y[i] * y[j] * (aj_old - aj);

      const double b1 = b - ei - y[i] * (ai - ai_old) * kmat[i * n + i] -
                        y[j] * (aj - aj_old) * kmat[i * n + j];
      const double b2 = b - ej - y[i] * (ai - ai_old) * kmat[i * n + j] -
                        y[j] * (aj - aj_old) * kmat[j * n + j];
      alpha[i] = ai;
      alpha[j] = aj;
      if (ai > 0.0 && ai < c)
        b = b1;
      else if (aj > 0.0 && aj < c)
        b = b2;
      else
        b = 0.5 * (b1 + b2);
      ++changed;
    }
    quiet_passes = changed == 0 ? quiet_passes + 1 : 0;
  }

  SmoResult res;
  res.alphas = alpha;
  res.model.bias = b;
  res.model.gamma = gamma;
  res.model.c = c;
  std::size_t n_sv = 0;
  for (double a : alpha)
    if (a > 0.0) ++n_sv;
  res.model.support = Tensor({n_sv, d});
  res.model.coeff.reserve(n_sv);
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] <= 0.0) continue;
    std::copy(x.data.begin() + i * d, x.data.begin() + (i + 1) * d,
              res.model.support.data.begin() + r * d);
    res.model.coeff.push_back(alpha[i] * y[i]);
    ++r;
  }
  return res;
}

namespace {

std::vector<double> standardized(const std::vector<double>& x, const std::vector<double>& mean,
                                 const std::vector<double>& stdev) {
  if (x.size() != mean.size())
    throw std::invalid_argument("svm: feature dim " + std::to_string(x.size()) +
                                " != model dim " + std::to_string(mean.size()));
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / stdev[i];
  return z;
}

}  // namespace

SvmMulti ovo_train(const Tensor& x, const std::vector<int>& labels, const SvmConfig& cfg) {
  if (x.ndim() != 2 || x.rows() == 0)
    throw std::invalid_argument("svm: features must be a nonempty [n x d] matrix");
  const std::size_t n = x.rows(), d = x.cols();
  if (labels.size() != n) throw std::invalid_argument("svm: label count mismatch");
  if (!x.all_finite()) throw std::invalid_argument("svm: non-finite feature values");

  std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2)
    throw std::invalid_argument("svm: need at least 2 classes present at train time");

  SvmMulti m;
  m.classes.assign(present.begin(), present.end());
  m.c = cfg.c;

  m.mean.assign(d, 0.0);
  m.stdev.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += x(i, j);
  for (std::size_t j = 0; j < d; ++j) m.mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double v = x(i, j) - m.mean[j];
      m.stdev[j] += v * v;
    }
  for (std::size_t j = 0; j < d; ++j) {
    m.stdev[j] = std::sqrt(m.stdev[j] / static_cast<double>(n));
    if (m.stdev[j] == 0.0) m.stdev[j] = 1.0;
  }

  Tensor xs({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xs(i, j) = (x(i, j) - m.mean[j]) / m.stdev[j];

  if (cfg.gamma > 0.0) {
    m.gamma = cfg.gamma;
  } else {
    // 1 / (d * var) on the standardized matrix, sklearn's "scale" analog.
    double mu = 0.0;
    for (double v : xs.data) mu += v;
    mu /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs.data) var += (v - mu) * (v - mu);
    var /= static_cast<double>(xs.size());
    m.gamma = var > 0.0 ? 1.0 / (static_cast<double>(d) * var) : 1.0 / static_cast<double>(d);
  }

  for (std::size_t a = 0; a < m.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < m.classes.size(); ++b) {
      const int ca = m.classes[a], cb = m.classes[b];
      std::vector<std::size_t> rows;
      std::vector<int> yy;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == ca || labels[i] == cb) {
          rows.push_back(i);
          yy.push_back(labels[i] == ca ? 1 : -1);
        }
      }
      Tensor xp({rows.size(), d});
      for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy(xs.data.begin() + rows[r] * d, xs.data.begin() + (rows[r] + 1) * d,
                  xp.data.begin() + r * d);
      const std::uint64_t pair_seed =
          derive_seed(cfg.seed, "pair" + std::to_string(ca) + "-" + std::to_string(cb));
      SmoResult r = smo_train_binary(xp, yy, cfg.c, m.gamma, cfg.tol, cfg.max_passes, pair_seed);
      r.model.pos_class = ca;
      r.model.neg_class = cb;
      m.pairs.push_back(std::move(r.model));
    }
  }
  return m;
}

int ovo_predict(const SvmMulti& m, const std::vector<double>& x) {
  const std::vector<double> z = standardized(x, m.mean, m.stdev);
  std::map<int, std::size_t> votes;
  for (int c : m.classes) votes[c] = 0;
  for (const auto& p : m.pairs) ++votes[p.decision(z) >= 0.0 ? p.pos_class : p.neg_class];
  int best = m.classes.front();
  std::size_t best_votes = votes[best];
  for (int c : m.classes)
    if (votes[c] > best_votes) {  // ties keep the lowest code
      best = c;
      best_votes = votes[c];
    }
  return best;
}

std::vector<int> ovo_predict(const SvmMulti& m, const Tensor& x) {
  if (x.ndim() != 2) throw std::invalid_argument("svm: features must be [n x d]");
  std::vector<int> out;
  out.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<double> row(x.data.begin() + i * x.cols(), x.data.begin() + (i + 1) * x.cols());
    out.push_back(ovo_predict(m, row));
  }
  return out;
}

std::vector<std::uint8_t> save_svm(const SvmMulti& m) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : m.pairs)
    pairs.push_back({{"pos", p.pos_class},
                     {"neg", p.neg_class},
                     {"bias", p.bias},
                     {"n_sv", p.support.rows()}});
  const nlohmann::json header{{"version", kSermVersion}, {"gamma", m.gamma},
                              {"c", m.c},               {"classes", m.classes},
                              {"mean", m.mean},         {"std", m.stdev},
                              {"pairs", pairs}};
  const std::string header_text = header.dump();

  std::ostringstream out(std::ios::binary);
  out.write("SERM", 4);
  write_u32le(out, kSermVersion);
  write_u32le(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& p : m.pairs) {
    write_sert(out, p.support);
    Tensor coeff({p.coeff.size()});
    coeff.data = p.coeff;
    write_sert(out, coeff);
  }
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

SvmMulti load_svm(const std::vector<std::uint8_t>& bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SERM")
    throw FormatError("svm model: bad magic, not a SERM file");
  const std::uint32_t version = read_u32le(in);
  if (version != kSermVersion)
    throw FormatError("svm model: unsupported version " + std::to_string(version));
  const std::uint32_t len = read_u32le(in);
  std::string header_text(len, '\0');
  in.read(header_text.data(), len);
  if (!in) throw FormatError("svm model: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("svm model: bad header json: ") + e.what());
  }

  SvmMulti m;
  try {
    m.gamma = header.at("gamma").get<double>();
    m.c = header.at("c").get<double>();
    header.at("classes").get_to(m.classes);
    header.at("mean").get_to(m.mean);
    header.at("std").get_to(m.stdev);
    for (const auto& pj : header.at("pairs")) {
      SvmBinary p;
      p.pos_class = pj.at("pos").get<int>();
      p.neg_class = pj.at("neg").get<int>();
      p.bias = pj.at("bias").get<double>();
      p.gamma = m.gamma;
      p.c = m.c;
      p.support = read_sert(in);
      Tensor coeff = read_sert(in);
      if (p.support.ndim() != 2 || coeff.ndim() != 1 ||
          coeff.size() != p.support.rows() ||
          p.support.rows() != pj.at("n_sv").get<std::size_t>())
        throw FormatError("svm model: inconsistent support vector block");
      p.coeff = coeff.data;
      m.pairs.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("svm model: bad header field: ") + e.what());
  }
  const std::size_t want = m.classes.size() * (m.classes.size() - 1) / 2;
  if (m.pairs.size() != want)
    throw FormatError("svm model: expected " + std::to_string(want) + " pairs, found " +
                      std::to_string(m.pairs.size()));
  return m;
}

void save_svm_file(const SvmMulti& m, const std::string& path) {
  const auto bytes = save_svm(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("svm model: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("svm model: write failed for '" + path + "'");
}

SvmMulti load_svm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("svm model: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return load_svm(bytes);
}

}  // namespace ser::svm
