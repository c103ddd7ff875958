#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ser/nn/model.hpp"

namespace ser::nn {

inline constexpr std::uint32_t kSercVersion = 1;

struct CheckpointTensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;  // f32-exact: rounded once when captured
  bool frozen = false;
  bool buffer = false;  // running stats etc.; never touched by the optimizer
};

// Immutable training snapshot: architecture, every named tensor (params and
// buffers), freeze flags, and training metadata.
struct ModelCheckpoint {
  ModelSpec spec;
  std::uint32_t epoch = 0;
  std::uint64_t config_hash = 0;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

// Snapshot of the model's current params + buffers; values are rounded to
// f32 so that save -> load returns bitwise-equal tensors.
ModelCheckpoint checkpoint_from_model(Model& m, std::uint32_t epoch = 0,
                                      std::uint64_t config_hash = 0);

// Rebuilds the model and restores every tensor and freeze flag. Throws on
// any mismatch between the stored architecture and the stored tensors.
Model model_from_checkpoint(const ModelCheckpoint& c);

std::vector<std::uint8_t> save_checkpoint(const ModelCheckpoint& c);
ModelCheckpoint load_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint_file(const ModelCheckpoint& c, const std::string& path);
ModelCheckpoint load_checkpoint_file(const std::string& path);

// Marks every non-buffer tensor whose name starts with `prefix` as frozen;
// throws when nothing matches.
void freeze(ModelCheckpoint& c, const std::string& prefix);

// Returns a copy whose final dense head is re-initialized for `n_classes`
// outputs (fresh He-normal weights, zero bias, unfrozen); every other
// tensor is untouched.
ModelCheckpoint replace_head(const ModelCheckpoint& c, std::size_t n_classes,
                             std::uint64_t seed = 0);

}  // namespace ser::nn
