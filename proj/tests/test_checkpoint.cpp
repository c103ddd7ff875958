#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "ser/nn/adam.hpp"
#include "ser/nn/checkpoint.hpp"
#include "ser/nn/loss.hpp"
#include "ser/sert.hpp"

using namespace ser;
using namespace ser::nn;
namespace fs = std::filesystem;

namespace {

Model make_net(std::uint64_t seed) {
  return build_model(build_mini_resnet({4, 6}, 4, 1, 1), seed);
}

// One train step: forward in train mode, backprop a cross entropy, Adam.
void one_step(Model& m, Adam& opt, std::uint64_t seed) {
  Tensor x = oracle::kink_free_input({2, 1, 16, 16}, seed);
  Tensor target({2, 4});
  target.fill(0.0);
  target.data[0] = 1.0;
  target.data[4 + 2] = 1.0;
  Tensor logits = m.forward(x, true);
  auto res = softmax_cross_entropy(logits, target);
  m.zero_grads();
  m.backward(res.grad);
  opt.step(m.params());
}

}  // namespace

TEST_CASE("save then load returns bitwise-equal tensors") {
  Model m = make_net(11);
  // Push some data through so batchnorm buffers are nontrivial.
  Tensor x = oracle::kink_free_input({2, 1, 16, 16}, 12);
  m.forward(x, true);

  ModelCheckpoint c = checkpoint_from_model(m, 7, 0xdeadbeefULL);
  auto bytes = save_checkpoint(c);
  ModelCheckpoint back = load_checkpoint(bytes);

  CHECK(back.spec == c.spec);
  CHECK(back.epoch == 7);
  CHECK(back.config_hash == 0xdeadbeefULL);
  REQUIRE(back.tensors.size() == c.tensors.size());
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    CHECK(back.tensors[i].name == c.tensors[i].name);
    CHECK(back.tensors[i].dims == c.tensors[i].dims);
    CHECK(back.tensors[i].frozen == c.tensors[i].frozen);
    CHECK(back.tensors[i].buffer == c.tensors[i].buffer);
    // checkpoint_from_model already rounded to f32, so equality is exact.
    CHECK(back.tensors[i].values == c.tensors[i].values);
  }

  // Round trip through the model restores the same forward function.
  Model m2 = model_from_checkpoint(back);
  Tensor y1 = m.forward(x, false);
  Tensor y2 = m2.forward(x, false);
  for (std::size_t i = 0; i < y1.size(); ++i)
    CHECK(y1.data[i] == doctest::Approx(y2.data[i]).epsilon(1e-6));
}

TEST_CASE("save is deterministic byte for byte") {
  Model m = make_net(3);
  ModelCheckpoint c = checkpoint_from_model(m);
  CHECK(save_checkpoint(c) == save_checkpoint(c));
}

TEST_CASE("file round trip") {
  Model m = make_net(5);
  ModelCheckpoint c = checkpoint_from_model(m, 2, 99);
  fs::path p = fs::temp_directory_path() / "ser_test_ckpt.serc";
  save_checkpoint_file(c, p.string());
  ModelCheckpoint back = load_checkpoint_file(p.string());
  CHECK(back.spec == c.spec);
  CHECK(back.tensors.size() == c.tensors.size());
  fs::remove(p);
  CHECK_THROWS(load_checkpoint_file((fs::temp_directory_path() / "ser_no_such.serc").string()));
}

TEST_CASE("frozen tensors survive optimizer steps bit for bit") {
  Model m = make_net(21);
  m.freeze("stem.");
  ModelCheckpoint before = checkpoint_from_model(m);

  Adam opt;
  one_step(m, opt, 1);
  one_step(m, opt, 2);

  ModelCheckpoint after = checkpoint_from_model(m);
  bool any_moved = false;
  for (const auto& t : after.tensors) {
    const CheckpointTensor* b = before.find(t.name);
    REQUIRE(b != nullptr);
    if (t.name.rfind("stem.", 0) == 0) {
      // Params and running stats under the frozen prefix must not move.
      CHECK(t.values == b->values);
    } else if (t.values != b->values) {
      any_moved = true;
    }
  }
  CHECK(any_moved);
}

TEST_CASE("freeze flags round trip through serialization") {
  Model m = make_net(31);
  ModelCheckpoint c = checkpoint_from_model(m);
  freeze(c, "stage0.");
  ModelCheckpoint back = load_checkpoint(save_checkpoint(c));
  bool saw_frozen = false, saw_live = false;
  for (const auto& t : back.tensors) {
    if (t.buffer) continue;
    if (t.name.rfind("stage0.", 0) == 0) {
      CHECK(t.frozen);
      saw_frozen = true;
    } else {
      CHECK_FALSE(t.frozen);
      saw_live = true;
    }
  }
  CHECK(saw_frozen);
  CHECK(saw_live);
  CHECK_THROWS_AS(freeze(c, "bogus."), std::invalid_argument);

  // model_from_checkpoint applies the flags.
  Model m2 = model_from_checkpoint(back);
  for (auto& pr : m2.params()) {
    if (pr.name.rfind("stage0.", 0) == 0)
      CHECK(pr.param->frozen);
    else
      CHECK_FALSE(pr.param->frozen);
  }
}

TEST_CASE("replace_head swaps only the final dense layer") {
  Model m = make_net(41);
  ModelCheckpoint c = checkpoint_from_model(m, 9, 1);
  freeze(c, "stem.");
  const CheckpointTensor* old_w = c.find("head.W");
  REQUIRE(old_w != nullptr);
  REQUIRE(c.spec.layers.back().out == 4);

  ModelCheckpoint wider = replace_head(c, 8, 77);
  CHECK(wider.spec.layers.back().out == 8);
  const CheckpointTensor* new_w = wider.find("head.W");
  const CheckpointTensor* new_b = wider.find("head.b");
  REQUIRE(new_w != nullptr);
  REQUIRE(new_b != nullptr);
  CHECK(new_w->dims == std::vector<std::size_t>{old_w->dims[0], 8});
  CHECK_FALSE(new_w->frozen);
  for (double v : new_b->values) CHECK(v == 0.0);
  bool any_nonzero = false;
  for (double v : new_w->values) any_nonzero = any_nonzero || v != 0.0;
  CHECK(any_nonzero);

  // Everything else is untouched, including freeze flags.
  for (const auto& t : wider.tensors) {
    if (t.name.rfind("head.", 0) == 0) continue;
    const CheckpointTensor* before = c.find(t.name);
    REQUIRE(before != nullptr);
    CHECK(t.values == before->values);
    CHECK(t.frozen == before->frozen);
  }

  // The rebuilt model runs and emits 8 logits.
  Model m8 = model_from_checkpoint(wider);
  Tensor x = oracle::kink_free_input({1, 1, 16, 16}, 5);
  CHECK(m8.forward(x, false).dims == std::vector<std::size_t>{1, 8});

  // Head replacement is seeded.
  ModelCheckpoint again = replace_head(c, 8, 77);
  CHECK(again.find("head.W")->values == new_w->values);
  ModelCheckpoint other = replace_head(c, 8, 78);
  CHECK(other.find("head.W")->values != new_w->values);
}

TEST_CASE("corrupt checkpoints are rejected") {
  Model m = make_net(51);
  auto bytes = save_checkpoint(checkpoint_from_model(m));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(load_checkpoint(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 0xAA;
  CHECK_THROWS_AS(load_checkpoint(bad_version), FormatError);

  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_AS(load_checkpoint(truncated), FormatError);

  std::vector<std::uint8_t> tiny = {'S', 'E'};
  CHECK_THROWS_AS(load_checkpoint(tiny), FormatError);
}

TEST_CASE("model_from_checkpoint rejects tensor set mismatches") {
  Model m = make_net(61);
  ModelCheckpoint c = checkpoint_from_model(m);

  ModelCheckpoint missing = c;
  missing.tensors.erase(missing.tensors.begin());
  CHECK_THROWS_AS(model_from_checkpoint(missing), FormatError);

  ModelCheckpoint extra = c;
  CheckpointTensor ghost;
  ghost.name = "phantom.W";
  ghost.dims = {1};
  ghost.values = {0.0};
  extra.tensors.push_back(ghost);
  CHECK_THROWS_AS(model_from_checkpoint(extra), FormatError);

  ModelCheckpoint wrong_count = c;
  wrong_count.tensors[0].values.push_back(0.0);
  CHECK_THROWS_AS(model_from_checkpoint(wrong_count), FormatError);

  ModelCheckpoint wrong_shape = c;
  wrong_shape.tensors[0].dims[0] += 1;
  CHECK_THROWS_AS(model_from_checkpoint(wrong_shape), FormatError);
}
