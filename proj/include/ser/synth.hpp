#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ser/audio.hpp"
#include "ser/dataset.hpp"

namespace ser {

// One synthetic class: an amplitude-modulated tone. pitch_slope sweeps the
// carrier linearly across the clip, centered on carrier_hz, so a +s and a
// -s class share the same time-averaged spectrum and differ only in
// temporal direction.
struct SynthClassParams {
  double carrier_hz = 440.0;
  double am_rate_hz = 2.0;
  double pitch_slope_hz_per_s = 0.0;
  double noise_level = 0.05;

  bool operator==(const SynthClassParams&) const = default;
};

struct SynthSpec {
  int n_classes = 4;
  int per_class = 50;
  double duration_s = 4.0;
  int sample_rate = 22050;
  std::uint64_t seed = 0;
  std::vector<SynthClassParams> classes;  // one entry per class

  // Default class table: distinct carriers and AM rates per class, except
  // that the last two classes share carrier and AM rate and differ only by
  // the sign of the pitch slope. Needs 2 <= n_classes <= 8.
  static SynthSpec make(int n_classes, int per_class, double duration_s,
                        std::uint64_t seed, int sample_rate = 22050);

  void validate() const;
};

// Deterministic clip for (class_idx, item_idx); the per-file stream is
// derived from spec.seed and the flat file index.
AudioClip synth_clip(const SynthSpec& spec, int class_idx, int item_idx);

// Writes per_class * n_classes PCM16 WAV files under out_dir and returns
// the labeled manifest (splits unassigned). Byte-identical per seed.
Manifest synth_corpus(const SynthSpec& spec, const std::string& out_dir);

}  // namespace ser
