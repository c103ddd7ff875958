#pragma once

#include <vector>

#include "json.hpp"
#include "ser/rng.hpp"
#include "ser/tensor.hpp"

namespace ser::aug {

struct MixupPair {
  Tensor x_i;
  Tensor x_j;
  std::vector<double> y_i;  // one-hot (or already-soft) label
  std::vector<double> y_j;
  double lambda = 1.0;
};

struct MixupResult {
  Tensor x;
  std::vector<double> y;
};

// x~ = l*x_i + (1-l)*x_j and y~ = l*y_i + (1-l)*y_j, elementwise.
MixupResult mixup(const MixupPair& p);

// Beta(alpha, alpha) via two gamma draws.
double sample_lambda(double alpha, Rng& rng);

// All image ops take a [0,1]-normalized matrix and preserve its shape.
Tensor rotate(const Tensor& img, double degrees);
Tensor zoom(const Tensor& img, double factor);  // factor >= 1, zooms in
Tensor brightness(const Tensor& img, double delta);

// Zeroes n_time random time (column) stripes and n_freq random frequency
// (row) stripes, each of random width in [1, max_width].
Tensor spec_mask(const Tensor& img, std::size_t n_time, std::size_t n_freq,
                 std::size_t max_width, Rng& rng);

struct AugmentPolicy {
  double rotate_deg = 5.0;  // rotation drawn from [-rotate_deg, +rotate_deg]
  double rotate_prob = 0.5;
  double zoom_max = 1.1;  // zoom factor drawn from [1, zoom_max]
  double zoom_prob = 0.5;
  double brightness_delta = 0.1;  // delta drawn from [-d, +d]
  double brightness_prob = 0.5;
  std::size_t n_time_masks = 0;
  std::size_t n_freq_masks = 0;
  std::size_t mask_max_width = 0;
  double mixup_alpha = 0.4;

  void validate() const;
  bool operator==(const AugmentPolicy&) const = default;
};

void to_json(nlohmann::json& j, const AugmentPolicy& p);
void from_json(const nlohmann::json& j, AugmentPolicy& p);

// Applies each transform independently with its probability, parameters
// drawn uniformly from the policy ranges. Training-time only.
Tensor apply_policy(const Tensor& img, const AugmentPolicy& policy, Rng& rng);

}  // namespace ser::aug
