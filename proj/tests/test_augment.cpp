#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "ser/augment.hpp"
#include "ser/rng.hpp"

using namespace ser;
using namespace ser::aug;

namespace {

Tensor image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Tensor img({h, w});
  Rng rng(seed);
  for (auto& v : img.data) v = rng.uniform(0.0, 1.0);
  return img;
}

std::vector<double> one_hot(int k, int n = 8) {
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  v[static_cast<std::size_t>(k)] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("mixup endpoints and midpoint") {
  MixupPair p;
  p.x_i = image(2, 2, 1);
  p.x_j = image(2, 2, 2);
  p.y_i = one_hot(2);
  p.y_j = one_hot(5);

  p.lambda = 1.0;
  MixupResult at_one = mixup(p);
  CHECK(at_one.x.data == p.x_i.data);
  CHECK(at_one.y == p.y_i);

  p.lambda = 0.5;
  MixupResult mid = mixup(p);
  CHECK(mid.y[2] == 0.5);
  CHECK(mid.y[5] == 0.5);
  double sum = 0.0;
  for (double v : mid.y) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixup hand-forced values") {
  MixupPair p;
  p.x_i = Tensor({2});
  p.x_i.data = {2.0, 0.0};
  p.x_j = Tensor({2});
  p.x_j.data = {0.0, 4.0};
  p.y_i = one_hot(0, 2);
  p.y_j = one_hot(1, 2);
  p.lambda = 0.25;
  MixupResult r = mixup(p);
  CHECK(r.x.data[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.x.data[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("mixup convex hull and symmetry") {
  Rng lam_rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    MixupPair p;
    p.x_i = image(3, 4, 100 + trial);
    p.x_j = image(3, 4, 200 + trial);
    p.y_i = one_hot(trial % 8);
    p.y_j = one_hot((trial + 3) % 8);
    p.lambda = lam_rng.uniform();
    MixupResult r = mixup(p);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      CHECK(r.x.data[i] >= std::min(p.x_i.data[i], p.x_j.data[i]) - 1e-12);
      CHECK(r.x.data[i] <= std::max(p.x_i.data[i], p.x_j.data[i]) + 1e-12);
    }
    double sum = 0.0;
    for (double v : r.y) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    MixupPair swapped;
    swapped.x_i = p.x_j;
    swapped.x_j = p.x_i;
    swapped.y_i = p.y_j;
    swapped.y_j = p.y_i;
    swapped.lambda = 1.0 - p.lambda;
    MixupResult s = mixup(swapped);
    for (std::size_t i = 0; i < r.x.size(); ++i)
      CHECK(s.x.data[i] == doctest::Approx(r.x.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("mixup validation") {
  MixupPair p;
  p.x_i = image(2, 2, 1);
  p.x_j = image(2, 3, 2);
  p.y_i = one_hot(0);
  p.y_j = one_hot(1);
  p.lambda = 0.5;
  CHECK_THROWS_AS(mixup(p), std::invalid_argument);
  p.x_j = image(2, 2, 2);
  p.lambda = 1.5;
  CHECK_THROWS_AS(mixup(p), std::invalid_argument);
}

TEST_CASE("sample_lambda is beta distributed and seeded") {
  Rng a(5), b(5);
  std::vector<double> draws(100000);
  for (auto& d : draws) {
    d = sample_lambda(0.4, a);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
  CHECK(oracle::mean_of(draws) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(sample_lambda(0.4, b) == draws[0]);
  Rng c(5);
  CHECK_THROWS_AS(sample_lambda(0.0, c), std::invalid_argument);
  CHECK_THROWS_AS(sample_lambda(-1.0, c), std::invalid_argument);
}

TEST_CASE("rotate identity at zero degrees") {
  Tensor img = image(7, 9, 3);
  Tensor out = rotate(img, 0.0);
  REQUIRE(out.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));
}

TEST_CASE("rotate 90 degrees matches the coordinate-map oracle") {
  // Odd square so the center is a lattice point and the map is exact.
  Tensor img = image(5, 5, 4);
  Tensor out = rotate(img, 90.0);
  // Our convention: output pixel (r, c) samples the input at the point
  // obtained by rotating (r, c) about the center by -90 degrees.
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      const double dy = static_cast<double>(r) - 2.0;
      const double dx = static_cast<double>(c) - 2.0;
      // cos(90)=0, sin(90)=1: sy = 2 - dx, sx = 2 + dy (sign per rotate()).
      const long sy = 2 - static_cast<long>(dx);
      const long sx = 2 + static_cast<long>(dy);
      const double expect =
          (sy >= 0 && sy < 5 && sx >= 0 && sx < 5) ? img(static_cast<std::size_t>(sy),
                                                         static_cast<std::size_t>(sx))
                                                   : 0.0;
      CHECK(out(r, c) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("rotate preserves shape and range") {
  Tensor img = image(6, 8, 5);
  Tensor out = rotate(img, 13.0);
  REQUIRE(out.same_shape(img));
  for (double v : out.data) {
    CHECK(v >= -1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("zoom behavior") {
  Tensor img = image(8, 8, 6);
  Tensor same = zoom(img, 1.0);
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(same.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));

  Tensor zoomed = zoom(img, 1.5);
  REQUIRE(zoomed.same_shape(img));
  // Center pixel approaches the source center under center-crop zoom.
  CHECK(zoomed(4, 4) == doctest::Approx(img(4, 4)).epsilon(0.5));
  CHECK_THROWS_AS(zoom(img, 0.9), std::invalid_argument);
}

TEST_CASE("brightness adds then clamps") {
  Tensor img({1, 3});
  img.data = {0.0, 0.5, 0.95};
  Tensor up = brightness(img, 0.2);
  CHECK(up.data[0] == doctest::Approx(0.2));
  CHECK(up.data[1] == doctest::Approx(0.7));
  CHECK(up.data[2] == 1.0);
  Tensor down = brightness(img, -0.2);
  CHECK(down.data[0] == 0.0);
  CHECK(down.data[1] == doctest::Approx(0.3));
}

TEST_CASE("spec_mask zeroes seeded stripes") {
  Tensor img({16, 20});
  img.fill(1.0);
  Rng a(8), b(8);
  Tensor m1 = spec_mask(img, 2, 1, 3, a);
  Tensor m2 = spec_mask(img, 2, 1, 3, b);
  CHECK(m1.data == m2.data);

  // identity when no masks requested
  Rng c(8);
  Tensor same = spec_mask(img, 0, 0, 3, c);
  CHECK(same.data == img.data);

  // masked fraction bound: (n_time + n_freq) * max_width / min(dim)
  double zeroed = 0.0;
  for (double v : m1.data) zeroed += v == 0.0 ? 1.0 : 0.0;
  const double frac = zeroed / static_cast<double>(img.size());
  CHECK(frac <= (2.0 + 1.0) * 3.0 / 16.0 + 1e-12);

  Rng d(8);
  CHECK_THROWS_AS(spec_mask(img, 1, 0, 25, d), std::invalid_argument);
}

TEST_CASE("apply_policy identity modes") {
  Tensor img = image(10, 10, 9);

  AugmentPolicy off;
  off.rotate_prob = 0.0;
  off.zoom_prob = 0.0;
  off.brightness_prob = 0.0;
  Rng r1(1);
  Tensor same = apply_policy(img, off, r1);
  CHECK(same.data == img.data);

  AugmentPolicy degenerate;
  degenerate.rotate_prob = 1.0;
  degenerate.rotate_deg = 0.0;
  degenerate.zoom_prob = 1.0;
  degenerate.zoom_max = 1.0;
  degenerate.brightness_prob = 1.0;
  degenerate.brightness_delta = 0.0;
  Rng r2(2);
  Tensor near_same = apply_policy(img, degenerate, r2);
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(near_same.data[i] == doctest::Approx(img.data[i]).epsilon(1e-9));

  AugmentPolicy active;  // defaults: all transforms at probability 0.5
  Rng r3(3), r4(3);
  Tensor o1 = apply_policy(img, active, r3);
  Tensor o2 = apply_policy(img, active, r4);
  CHECK(o1.data == o2.data);
}

TEST_CASE("augment policy json round trip and validation") {
  AugmentPolicy p;
  p.rotate_deg = 7.5;
  p.zoom_max = 1.2;
  p.n_time_masks = 2;
  p.n_freq_masks = 1;
  p.mask_max_width = 4;
  p.mixup_alpha = 0.2;
  nlohmann::json j = p;
  AugmentPolicy back = j.get<AugmentPolicy>();
  CHECK(back == p);

  AugmentPolicy bad;
  bad.rotate_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  AugmentPolicy bad2;
  bad2.zoom_max = 0.8;
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}
