#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ser/nn/layers.hpp"
#include "ser/rng.hpp"

using namespace ser;
using namespace ser::nn;

TEST_CASE("relu forward and backward") {
  ReLU relu;
  Tensor x({2});
  x.data = {-1.0, 2.0};
  Tensor y = relu.forward(x, true);
  CHECK(y.data[0] == 0.0);
  CHECK(y.data[1] == 2.0);
  Tensor g({2});
  g.data = {1.0, 1.0};
  Tensor dx = relu.backward(g);
  CHECK(dx.data[0] == 0.0);
  CHECK(dx.data[1] == 1.0);
}

TEST_CASE("dense forward matches xW + b") {
  Dense dense(3, 2);
  dense.w.value.data = {1, 2, 3, 4, 5, 6};  // [3,2]
  dense.b.value.data = {0.5, -0.5};
  Tensor x({1, 3});
  x.data = {1.0, 0.0, -1.0};
  Tensor y = dense.forward(x, true);
  CHECK(y.data[0] == doctest::Approx(1 * 1 + 0 * 3 + (-1) * 5 + 0.5));
  CHECK(y.data[1] == doctest::Approx(1 * 2 + 0 * 4 + (-1) * 6 - 0.5));
}

TEST_CASE("dense gradient check over 5 seeds") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dense dense(4, 3);
    Rng rng(derive_seed(seed, "init"));
    dense.init(rng);
    Tensor x = oracle::kink_free_input({2, 4}, derive_seed(seed, "x"));
    auto rep = oracle::fd_check_layer(dense, x, seed);
    INFO("seed ", seed, " worst ", rep.worst);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("conv identity kernel passes input through") {
  Conv2d conv(1, 1, 3, 1);
  conv.w.value.fill(0.0);
  conv.w.value.data[4] = 1.0;  // center tap
  conv.b.value.fill(0.0);
  Tensor x = oracle::kink_free_input({1, 1, 5, 5}, 3);
  Tensor y = conv.forward(x, true);
  REQUIRE(y.dims == x.dims);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-12));
}

TEST_CASE("conv shapes for stride 2 and 1x1 kernels") {
  Conv2d s2(2, 3, 3, 2);
  Rng rng(1);
  s2.init(rng);
  Tensor x({2, 2, 8, 8});
  x.fill(0.25);
  Tensor y = s2.forward(x, true);
  CHECK(y.dims == std::vector<std::size_t>{2, 3, 4, 4});

  Conv2d one(3, 4, 1, 1);
  one.init(rng);
  Tensor x2({1, 3, 5, 5});
  x2.fill(0.5);
  CHECK(one.forward(x2, true).dims == std::vector<std::size_t>{1, 4, 5, 5});

  CHECK_THROWS_AS(Conv2d(1, 1, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(Conv2d(1, 1, 3, 3), std::invalid_argument);
}

TEST_CASE("conv gradient check over 5 seeds") {
  for (std::uint64_t seed = 11; seed <= 15; ++seed) {
    const std::size_t stride = seed % 2 ? 1 : 2;
    Conv2d conv(2, 3, 3, stride);
    Rng rng(derive_seed(seed, "init"));
    conv.init(rng);
    Tensor x = oracle::kink_free_input({2, 2, 5, 5}, derive_seed(seed, "x"));
    auto rep = oracle::fd_check_layer(conv, x, seed);
    INFO("seed ", seed, " worst ", rep.worst);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("batchnorm normalizes per channel in train mode") {
  BatchNorm bn(3);
  Rng rng(1);
  bn.init(rng);
  Tensor x = oracle::kink_free_input({4, 3, 2, 2}, 5);
  Tensor y = bn.forward(x, true);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    std::size_t n = 0;
    for (std::size_t bi = 0; bi < 4; ++bi)
      for (std::size_t s = 0; s < 4; ++s) {
        mean += y.data[(bi * 3 + c) * 4 + s];
        ++n;
      }
    mean /= static_cast<double>(n);
    for (std::size_t bi = 0; bi < 4; ++bi)
      for (std::size_t s = 0; s < 4; ++s) {
        const double d = y.data[(bi * 3 + c) * 4 + s] - mean;
        var += d * d;
      }
    var /= static_cast<double>(n);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batchnorm running stats converge and drive eval mode") {
  BatchNorm bn(2);
  Rng rng(2);
  bn.init(rng);
  // Feed a nonzero-mean stream.
  Tensor x({8, 2});
  Rng data_rng(7);
  for (int step = 0; step < 200; ++step) {
    for (std::size_t i = 0; i < x.size(); ++i)
      x.data[i] = 3.0 + 2.0 * data_rng.normal();
    bn.forward(x, true);
  }
  CHECK(bn.running_mean.data[0] == doctest::Approx(3.0).epsilon(0.1));
  CHECK(bn.running_var.data[0] == doctest::Approx(4.0).epsilon(0.2));

  // Eval mode uses the running stats: a sample at the running mean maps
  // near gamma*0 + beta = 0.
  Tensor probe({1, 2});
  probe.data = {bn.running_mean.data[0], bn.running_mean.data[1]};
  Tensor out = bn.forward(probe, false);
  CHECK(std::fabs(out.data[0]) < 1e-9);

  // Eval-mode forward must not move the stats.
  const double before = bn.running_mean.data[0];
  bn.forward(probe, false);
  CHECK(bn.running_mean.data[0] == before);
}

TEST_CASE("frozen batchnorm keeps running stats even in train mode") {
  BatchNorm bn(2);
  Rng rng(3);
  bn.init(rng);
  Tensor x = oracle::kink_free_input({4, 2}, 9);
  bn.forward(x, true);
  const Tensor mean_before = bn.running_mean;
  bn.gamma.frozen = true;
  bn.beta.frozen = true;
  bn.forward(x, true);
  CHECK(bn.running_mean.data == mean_before.data);
}

TEST_CASE("batchnorm gradient check over 5 seeds, train and eval") {
  for (std::uint64_t seed = 21; seed <= 25; ++seed) {
    BatchNorm bn(3);
    Rng rng(derive_seed(seed, "init"));
    bn.init(rng);
    // Symmetry-break gamma/beta so the check exercises them.
    Rng gb(derive_seed(seed, "gb"));
    for (auto& v : bn.gamma.value.data) v = gb.uniform(0.5, 1.5);
    for (auto& v : bn.beta.value.data) v = gb.uniform(-0.5, 0.5);
    Tensor x = oracle::kink_free_input({3, 3, 2, 2}, derive_seed(seed, "x"));

    auto train_rep = oracle::fd_check_layer(bn, x, seed, true);
    INFO("train seed ", seed, " worst ", train_rep.worst);
    CHECK(train_rep.max_rel < 1e-4);

    bn.forward(x, true);  // populate running stats for the eval pass
    auto eval_rep = oracle::fd_check_layer(bn, x, seed, false);
    INFO("eval seed ", seed, " worst ", eval_rep.worst);
    CHECK(eval_rep.max_rel < 1e-4);
  }
}

TEST_CASE("maxpool picks window maxima and routes gradient") {
  MaxPool2 pool;
  Tensor x({1, 1, 2, 4});
  x.data = {1, 2, 5, 6,
            3, 4, 7, 8};
  Tensor y = pool.forward(x, true);
  REQUIRE(y.dims == std::vector<std::size_t>{1, 1, 1, 2});
  CHECK(y.data[0] == 4.0);
  CHECK(y.data[1] == 8.0);
  Tensor g({1, 1, 1, 2});
  g.data = {10.0, 20.0};
  Tensor dx = pool.backward(g);
  CHECK(dx.data[5] == 10.0);  // position of the 4
  CHECK(dx.data[7] == 20.0);  // position of the 8
  CHECK(dx.data[0] == 0.0);
}

TEST_CASE("maxpool drops odd trailing edges") {
  MaxPool2 pool;
  Tensor x({1, 1, 5, 5});
  x.fill(1.0);
  CHECK(pool.forward(x, true).dims == std::vector<std::size_t>{1, 1, 2, 2});
}

TEST_CASE("maxpool gradient check") {
  for (std::uint64_t seed = 31; seed <= 35; ++seed) {
    MaxPool2 pool;
    Tensor x = oracle::distinct_grid_input({1, 2, 4, 4}, seed);
    auto rep = oracle::fd_check_layer(pool, x, seed);
    INFO("seed ", seed, " worst ", rep.worst);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("global average pool and its gradient") {
  GlobalAvgPool gap;
  Tensor x({1, 2, 2, 2});
  x.data = {1, 2, 3, 4, 10, 20, 30, 40};
  Tensor y = gap.forward(x, true);
  REQUIRE(y.dims == std::vector<std::size_t>{1, 2});
  CHECK(y.data[0] == 2.5);
  CHECK(y.data[1] == 25.0);

  for (std::uint64_t seed = 41; seed <= 45; ++seed) {
    GlobalAvgPool g2;
    Tensor xr = oracle::kink_free_input({2, 3, 2, 2}, seed);
    auto rep = oracle::fd_check_layer(g2, xr, seed);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("dropout scales kept units and is identity in eval") {
  Dropout drop(0.5);
  drop.seed(123);
  Tensor x({1, 1000});
  x.fill(1.0);
  Tensor y = drop.forward(x, true);
  std::size_t kept = 0;
  for (double v : y.data) {
    if (v != 0.0) {
      CHECK(v == doctest::Approx(2.0));
      ++kept;
    }
  }
  CHECK(kept > 400);
  CHECK(kept < 600);

  Tensor ye = drop.forward(x, false);
  CHECK(ye.data == x.data);

  drop.seed(99);
  Tensor y1 = drop.forward(x, true);
  drop.seed(99);
  Tensor y2 = drop.forward(x, true);
  CHECK(y1.data == y2.data);

  CHECK_THROWS_AS(Dropout(1.0), std::invalid_argument);
  CHECK_THROWS_AS(Dropout(-0.1), std::invalid_argument);
}

TEST_CASE("dropout gradient check with reseeding") {
  for (std::uint64_t seed = 51; seed <= 55; ++seed) {
    Dropout drop(0.3);
    Tensor x = oracle::kink_free_input({2, 6}, seed);
    auto rep = oracle::fd_check_layer(drop, x, seed, true, [&] { drop.seed(seed * 7 + 1); });
    INFO("seed ", seed, " worst ", rep.worst);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("bilstm output shapes and state concatenation") {
  BiLSTM seq(3, 4, true);
  Rng rng(1);
  seq.init(rng);
  Tensor x = oracle::kink_free_input({2, 5, 3}, 2);
  Tensor y = seq.forward(x, true);
  CHECK(y.dims == std::vector<std::size_t>{2, 5, 8});

  BiLSTM last(3, 4, false);
  last.init(rng);
  Tensor y2 = last.forward(x, true);
  CHECK(y2.dims == std::vector<std::size_t>{2, 8});
}

TEST_CASE("bilstm final state equals the matching sequence entries") {
  // The non-sequence output concatenates the forward direction's last
  // hidden state with the backward direction's state at t=0.
  BiLSTM lstm(2, 3, false);
  Rng rng(7);
  lstm.init(rng);
  Tensor x = oracle::kink_free_input({1, 4, 2}, 8);
  Tensor final_out = lstm.forward(x, true);

  BiLSTM seq(2, 3, true);
  // Copy weights so both layers compute the same function.
  seq.fwd.wx.value = lstm.fwd.wx.value;
  seq.fwd.wh.value = lstm.fwd.wh.value;
  seq.fwd.b.value = lstm.fwd.b.value;
  seq.bwd.wx.value = lstm.bwd.wx.value;
  seq.bwd.wh.value = lstm.bwd.wh.value;
  seq.bwd.b.value = lstm.bwd.b.value;
  Tensor all = seq.forward(x, true);  // [1, 4, 6]

  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(final_out.data[j] == doctest::Approx(all.data[3 * 6 + j]).epsilon(1e-12));  // fwd at t=3
    CHECK(final_out.data[3 + j] == doctest::Approx(all.data[0 * 6 + 3 + j]).epsilon(1e-12));  // bwd at t=0
  }
}

TEST_CASE("bilstm forget gate bias starts at one") {
  BiLSTM lstm(2, 3, false);
  Rng rng(3);
  lstm.init(rng);
  // Fused gate order i, f, g, o: the f block is [H, 2H).
  for (std::size_t j = 3; j < 6; ++j) {
    CHECK(lstm.fwd.b.value.data[j] == 1.0);
    CHECK(lstm.bwd.b.value.data[j] == 1.0);
  }
  CHECK(lstm.fwd.b.value.data[0] == 0.0);
}

TEST_CASE("bilstm gradient check over 5 seeds, both output modes") {
  for (std::uint64_t seed = 61; seed <= 65; ++seed) {
    BiLSTM seq(3, 4, true);
    Rng rng(derive_seed(seed, "init"));
    seq.init(rng);
    Tensor x = oracle::kink_free_input({2, 4, 3}, derive_seed(seed, "x"), 0.05);
    auto rep = oracle::fd_check_layer(seq, x, seed);
    INFO("seq seed ", seed, " worst ", rep.worst);
    CHECK(rep.max_rel < 1e-4);

    BiLSTM fin(3, 4, false);
    fin.init(rng);
    auto rep2 = oracle::fd_check_layer(fin, x, seed + 1000);
    INFO("final seed ", seed, " worst ", rep2.worst);
    CHECK(rep2.max_rel < 1e-4);
  }
}

TEST_CASE("residual block projects when shape changes") {
  ResidualBlock same(4, 4, 1);
  Rng rng(1);
  same.init(rng);
  Tensor x = oracle::kink_free_input({1, 4, 6, 6}, 2);
  CHECK(same.forward(x, true).dims == std::vector<std::size_t>{1, 4, 6, 6});
  // No projection parameters when shape is preserved.
  for (auto& [name, p] : same.params()) CHECK(name.rfind("proj.", 0) != 0);

  ResidualBlock widen(4, 8, 2);
  widen.init(rng);
  CHECK(widen.forward(x, true).dims == std::vector<std::size_t>{1, 8, 3, 3});
  bool has_proj = false;
  for (auto& [name, p] : widen.params()) has_proj = has_proj || name.rfind("proj.", 0) == 0;
  CHECK(has_proj);
}

TEST_CASE("residual block gradient check over 5 seeds") {
  for (std::uint64_t seed = 71; seed <= 75; ++seed) {
    const std::size_t stride = seed % 2 ? 1 : 2;
    const std::size_t out_ch = seed % 2 ? 3 : 5;
    ResidualBlock block(3, out_ch, stride);
    Rng rng(derive_seed(seed, "init"));
    block.init(rng);
    Tensor x = oracle::kink_free_input({2, 3, 4, 4}, derive_seed(seed, "x"));
    auto rep = oracle::fd_check_layer(block, x, seed);
    INFO("seed ", seed, " stride ", stride, " worst ", rep.worst);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("backward before forward throws") {
  Dense dense(2, 2);
  Rng rng(1);
  dense.init(rng);
  Tensor g({1, 2});
  g.fill(1.0);
  CHECK_THROWS_AS(dense.backward(g), std::logic_error);
}
