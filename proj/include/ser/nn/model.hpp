#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "ser/nn/layers.hpp"

namespace ser::nn {

// Serializable layer descriptor. Field use by kind:
//   dense:     in, out
//   conv:      in, out (channels), ksize, stride
//   batchnorm: in (channels)
//   dropout:   p
//   bilstm:    in (features per frame), out (hidden size), return_seq
//   resblock:  in, out (channels), stride
//   relu, maxpool2, gap: no fields
struct LayerSpec {
  std::string kind;
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t ksize = 3;
  std::size_t stride = 1;
  double p = 0.0;
  bool return_seq = false;

  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  std::vector<LayerSpec> layers;

  // Nonempty, unique nonempty names, exactly one head: a final dense layer
  // named "head".
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

void to_json(nlohmann::json& j, const LayerSpec& s);
void from_json(const nlohmann::json& j, LayerSpec& s);
void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

class Model {
 public:
  ModelSpec spec;
  std::vector<std::unique_ptr<Layer>> layers;

  Tensor forward(const Tensor& x, bool train);
  // Backprops through the whole stack, accumulating parameter gradients;
  // returns the gradient wrt the network input.
  Tensor backward(const Tensor& grad_out);

  std::vector<ParamRef> params();
  std::vector<BufferRef> buffers();
  void zero_grads();
  std::size_t param_count();  // trainable scalars

  // Deterministic weight init: each layer gets an rng derived from
  // (seed, layer name).
  void init(std::uint64_t seed);
  // Gives every dropout layer its own derived mask stream.
  void seed_dropout(std::uint64_t seed);
  // Marks every param whose qualified name starts with `prefix` as frozen;
  // returns the number of params frozen. Throws when nothing matches.
  std::size_t freeze(const std::string& prefix);
};

Model build_model(const ModelSpec& spec);
Model build_model(const ModelSpec& spec, std::uint64_t seed);

// frames (T x n_feats) -> 2 stacked bidirectional LSTM layers -> dropout ->
// dense head producing n_classes logits.
ModelSpec build_bilstm_classifier(std::size_t n_feats = 128, std::size_t hidden = 64,
                                  std::size_t n_classes = 8);

// stem conv (stride 2) + pool, then residual stages (first block of each
// later stage downsamples), global average pool, dense head. Works at any
// input resolution >= 32x32, which is what progressive resizing relies on.
ModelSpec build_mini_resnet(const std::vector<std::size_t>& stage_channels = {8, 16, 32},
                            std::size_t n_classes = 8, std::size_t in_channels = 1,
                            std::size_t blocks_per_stage = 2);

}  // namespace ser::nn
