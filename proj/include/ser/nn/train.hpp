#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ser/augment.hpp"
#include "ser/features.hpp"
#include "ser/nn/checkpoint.hpp"

namespace ser::nn {

// image: features are resized to the stage size, min-max normalized and fed
// as [B, 1, H, W]. sequence: features [D, T] are min-max normalized and fed
// time-major as [B, T, D].
enum class InputLayout { image, sequence };
std::string to_string(InputLayout l);
InputLayout input_layout_from_string(const std::string& s);

struct ProgressiveStage {
  std::size_t size = 0;  // square side the inputs are resized to
  std::size_t epochs = 0;
  bool operator==(const ProgressiveStage&) const = default;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  double lr = 0.001;
  double lr_decay = 0.9;            // multiplied in every lr_decay_every epochs
  std::size_t lr_decay_every = 10;
  std::size_t epochs = 30;          // used when stages is empty
  std::uint64_t seed = 0;
  InputLayout layout = InputLayout::image;
  bool mixup = false;
  double mixup_alpha = 0.4;
  bool augment = false;             // train split only, image layout only
  aug::AugmentPolicy policy;
  std::vector<ProgressiveStage> stages;  // strictly ascending sizes
  std::vector<std::string> freeze_prefixes;
  double stop_at_val_acc = 0.0;     // early-stop threshold; 0 disables

  void validate() const;
  std::size_t total_epochs() const;
  std::uint64_t hash() const;  // fnv1a64 of the canonical json dump
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based, global across stages
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  std::size_t stage_size = 0;  // 0 = native resolution; not part of the csv
};

struct History {
  std::vector<EpochStats> rows;
  std::string to_csv() const;  // header: epoch,train_loss,val_loss,val_acc
  static History from_csv(const std::string& text);
};

struct TrainResult {
  ModelCheckpoint best;  // highest val acc; ties to lower val loss, then earlier
  History history;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic training: seeded per-epoch shuffles, optional in-batch
// mixup, optional augmentation on the train split, progressive stages that
// continue from the same weights, step lr decay, divergence detection.
TrainResult train(Model& model, const FeatureDataset& train_set,
                  const FeatureDataset& val_set, const TrainConfig& cfg);

struct EvalStats {
  double loss = 0.0;
  double acc = 0.0;
  std::vector<int> predictions;
};

// Eval-mode pass over a dataset; stage_size 0 keeps native resolution.
EvalStats evaluate(Model& model, const FeatureDataset& data, const TrainConfig& cfg,
                   std::size_t stage_size = 0);

}  // namespace ser::nn
