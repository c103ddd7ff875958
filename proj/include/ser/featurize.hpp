#pragma once

#include <string>

#include "ser/audio.hpp"
#include "ser/dataset.hpp"
#include "ser/features.hpp"
#include "ser/tensor.hpp"

#include "json.hpp"

namespace ser {

enum class FeatureKind { logmel, mfcc, mfcc_mean };
const char* to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeaturizeConfig {
  int sample_rate = 22050;
  double duration_s = 4.0;
  std::size_t n_fft = 2048;
  std::size_t hop = 512;
  std::size_t n_mels = 128;
  std::size_t n_mfcc = 20;
  FeatureKind kind = FeatureKind::logmel;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 -> sample_rate / 2

  void validate() const;
  bool operator==(const FeaturizeConfig&) const = default;
};

void to_json(nlohmann::json& j, const FeaturizeConfig& c);
void from_json(const nlohmann::json& j, FeaturizeConfig& c);

// Full per-clip pipeline: resample -> pad/trim -> stft -> mel -> log -> (mfcc
// -> (time average)). logmel/mfcc give a 2-d tensor, mfcc_mean a 1-d vector.
Tensor featurize_clip(const AudioClip& clip, const FeaturizeConfig& cfg);

// Stable output name for a manifest path: non [A-Za-z0-9._-] chars become '_',
// then ".sert" is appended.
std::string feature_file_name(const std::string& rel_path);

// Featurizes every manifest row into out_dir (parallel over files) and writes
// features.json describing the config. Relative paths resolve against root.
void featurize_manifest(const Manifest& m, const std::string& root,
                        const std::string& out_dir, const FeaturizeConfig& cfg,
                        int n_threads = 0);

FeaturizeConfig load_featurize_config(const std::string& dir);

// Loads all rows of one split from a feature directory.
FeatureDataset load_feature_dataset(const Manifest& m, Split split,
                                    const std::string& dir, int n_classes = 0);

}  // namespace ser
