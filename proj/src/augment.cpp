#include "ser/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ser::aug {

MixupResult mixup(const MixupPair& p) {
  if (!p.x_i.same_shape(p.x_j))
    throw std::invalid_argument("mixup: shape mismatch " + p.x_i.shape_str() + " vs " +
                                p.x_j.shape_str());
  if (p.y_i.size() != p.y_j.size())
    throw std::invalid_argument("mixup: label length mismatch");
  if (p.lambda < 0.0 || p.lambda > 1.0)
    throw std::invalid_argument("mixup: lambda outside [0, 1]");

  const double l = p.lambda;
  MixupResult out;
  out.x = p.x_i;
  for (std::size_t i = 0; i < out.x.size(); ++i)
    out.x[i] = l * p.x_i[i] + (1.0 - l) * p.x_j[i];
  out.y.resize(p.y_i.size());
  for (std::size_t i = 0; i < out.y.size(); ++i)
    out.y[i] = l * p.y_i[i] + (1.0 - l) * p.y_j[i];
  return out;
}

double sample_lambda(double alpha, Rng& rng) {
  if (alpha <= 0.0) throw std::invalid_argument("sample_lambda: alpha must be > 0");
  return rng.beta(alpha, alpha);
}

namespace {

double sample_bilinear_zero(const Tensor& img, double y, double x) {
  const double h = static_cast<double>(img.rows());
  const double w = static_cast<double>(img.cols());
  if (y <= -1.0 || x <= -1.0 || y >= h || x >= w) return 0.0;
  const long y0 = static_cast<long>(std::floor(y));
  const long x0 = static_cast<long>(std::floor(x));
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  auto pix = [&](long r, long c) -> double {
    if (r < 0 || c < 0 || r >= static_cast<long>(img.rows()) ||
        c >= static_cast<long>(img.cols()))
      return 0.0;
    return img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  return pix(y0, x0) * (1 - fy) * (1 - fx) + pix(y0, x0 + 1) * (1 - fy) * fx +
         pix(y0 + 1, x0) * fy * (1 - fx) + pix(y0 + 1, x0 + 1) * fy * fx;
}

}  // namespace

Tensor rotate(const Tensor& img, double degrees) {
  if (img.ndim() != 2 || img.empty())
    throw std::invalid_argument("rotate: need a nonempty 2-d matrix");
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (static_cast<double>(img.rows()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.cols()) - 1.0) / 2.0;

  Tensor out({img.rows(), img.cols()});
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t q = 0; q < img.cols(); ++q) {
      // Inverse map: rotate the output coordinate back into the source.
      const double dy = static_cast<double>(r) - cy;
      const double dx = static_cast<double>(q) - cx;
      const double sy = cy + c * dy - s * dx;
      const double sx = cx + s * dy + c * dx;
      out(r, q) = sample_bilinear_zero(img, sy, sx);
    }
  }
  return out;
}

Tensor zoom(const Tensor& img, double factor) {
  if (img.ndim() != 2 || img.empty())
    throw std::invalid_argument("zoom: need a nonempty 2-d matrix");
  if (factor < 1.0) throw std::invalid_argument("zoom: factor must be >= 1");
  const double cy = (static_cast<double>(img.rows()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.cols()) - 1.0) / 2.0;

  Tensor out({img.rows(), img.cols()});
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t q = 0; q < img.cols(); ++q) {
      const double sy = cy + (static_cast<double>(r) - cy) / factor;
      const double sx = cx + (static_cast<double>(q) - cx) / factor;
      out(r, q) = sample_bilinear_zero(img, sy, sx);
    }
  }
  return out;
}

Tensor brightness(const Tensor& img, double delta) {
  Tensor out = img;
  for (double& v : out.data) v = std::clamp(v + delta, 0.0, 1.0);
  return out;
}

Tensor spec_mask(const Tensor& img, std::size_t n_time, std::size_t n_freq,
                 std::size_t max_width, Rng& rng) {
  if (img.ndim() != 2 || img.empty())
    throw std::invalid_argument("spec_mask: need a nonempty 2-d matrix");
  const std::size_t rows = img.rows(), cols = img.cols();
  if ((n_time > 0 || n_freq > 0) && max_width == 0)
    throw std::invalid_argument("spec_mask: max_width must be > 0 when masking");
  if (n_time > 0 && max_width >= cols)
    throw std::invalid_argument("spec_mask: time mask width must be < n_frames");
  if (n_freq > 0 && max_width >= rows)
    throw std::invalid_argument("spec_mask: freq mask width must be < n_bands");

  Tensor out = img;
  for (std::size_t k = 0; k < n_time; ++k) {
    const std::size_t w = 1 + rng.below(max_width);
    const std::size_t start = rng.below(cols - w + 1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = start; c < start + w; ++c) out(r, c) = 0.0;
  }
  for (std::size_t k = 0; k < n_freq; ++k) {
    const std::size_t w = 1 + rng.below(max_width);
    const std::size_t start = rng.below(rows - w + 1);
    for (std::size_t r = start; r < start + w; ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) = 0.0;
  }
  return out;
}

void AugmentPolicy::validate() const {
  if (rotate_deg < 0.0 || zoom_max < 1.0 || brightness_delta < 0.0)
    throw std::invalid_argument("augment policy: ranges must be well-ordered");
  for (double p : {rotate_prob, zoom_prob, brightness_prob})
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("augment policy: probabilities must be in [0, 1]");
  if (mixup_alpha <= 0.0)
    throw std::invalid_argument("augment policy: mixup_alpha must be > 0");
}

void to_json(nlohmann::json& j, const AugmentPolicy& p) {
  j = nlohmann::json{{"rotate_deg", p.rotate_deg},
                     {"rotate_prob", p.rotate_prob},
                     {"zoom_max", p.zoom_max},
                     {"zoom_prob", p.zoom_prob},
                     {"brightness_delta", p.brightness_delta},
                     {"brightness_prob", p.brightness_prob},
                     {"n_time_masks", p.n_time_masks},
                     {"n_freq_masks", p.n_freq_masks},
                     {"mask_max_width", p.mask_max_width},
                     {"mixup_alpha", p.mixup_alpha}};
}

void from_json(const nlohmann::json& j, AugmentPolicy& p) {
  p = AugmentPolicy{};
  p.rotate_deg = j.value("rotate_deg", p.rotate_deg);
  p.rotate_prob = j.value("rotate_prob", p.rotate_prob);
  p.zoom_max = j.value("zoom_max", p.zoom_max);
  p.zoom_prob = j.value("zoom_prob", p.zoom_prob);
  p.brightness_delta = j.value("brightness_delta", p.brightness_delta);
  p.brightness_prob = j.value("brightness_prob", p.brightness_prob);
  p.n_time_masks = j.value("n_time_masks", p.n_time_masks);
  p.n_freq_masks = j.value("n_freq_masks", p.n_freq_masks);
  p.mask_max_width = j.value("mask_max_width", p.mask_max_width);
  p.mixup_alpha = j.value("mixup_alpha", p.mixup_alpha);
}

Tensor apply_policy(const Tensor& img, const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  Tensor out = img;
  if (rng.uniform() < policy.rotate_prob)
    out = rotate(out, rng.uniform(-policy.rotate_deg, policy.rotate_deg));
  if (rng.uniform() < policy.zoom_prob)
    out = zoom(out, rng.uniform(1.0, policy.zoom_max));
  if (rng.uniform() < policy.brightness_prob)
    out = brightness(out, rng.uniform(-policy.brightness_delta, policy.brightness_delta));
  if (policy.n_time_masks > 0 || policy.n_freq_masks > 0)
    out = spec_mask(out, policy.n_time_masks, policy.n_freq_masks,
                    policy.mask_max_width, rng);
  return out;
}

}  // namespace ser::aug
