#include "ser/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>
#include <stdexcept>

#include "ser/rng.hpp"

namespace ser {

SynthSpec SynthSpec::make(int n_classes, int per_class, double duration_s,
                          std::uint64_t seed, int sample_rate) {
  if (n_classes < 2 || n_classes > kNumEmotions)
    throw std::invalid_argument("synth: n_classes must be in [2, 8]");
  SynthSpec spec;
  spec.n_classes = n_classes;
  spec.per_class = per_class;
  spec.duration_s = duration_s;
  spec.sample_rate = sample_rate;
  spec.seed = seed;

  // Carrier slots spaced by 1.7x from 200 Hz. Static classes take the
  // first slots; the final two classes share the next slot as an
  // up-chirp/down-chirp pair, capped so the sweep stays above 50 Hz.
  auto carrier = [](int slot) { return 200.0 * std::pow(1.7, slot); };
  auto am_rate = [](int slot) { return 1.5 + 0.9 * slot; };
  const int chirp_slot = n_classes - 2;
  const double chirp_carrier = carrier(chirp_slot);
  const double max_slope = (chirp_carrier - 50.0) * 2.0 / duration_s;
  const double slope = std::min(150.0, max_slope);

  for (int k = 0; k < n_classes - 2; ++k)
    spec.classes.push_back({carrier(k), am_rate(k), 0.0, 0.05});
  spec.classes.push_back({chirp_carrier, am_rate(chirp_slot), slope, 0.05});
  spec.classes.push_back({chirp_carrier, am_rate(chirp_slot), -slope, 0.05});
  return spec;
}

void SynthSpec::validate() const {
  if (n_classes < 2 || n_classes > kNumEmotions)
    throw std::invalid_argument("synth: n_classes must be in [2, 8]");
  if (static_cast<int>(classes.size()) != n_classes)
    throw std::invalid_argument("synth: class parameter count != n_classes");
  if (per_class < 1) throw std::invalid_argument("synth: per_class must be >= 1");
  if (duration_s <= 0.0) throw std::invalid_argument("synth: duration must be > 0");
  if (sample_rate <= 0) throw std::invalid_argument("synth: sample_rate must be > 0");
  std::set<std::tuple<double, double, double, double>> seen;
  for (const auto& c : classes)
    if (!seen.insert({c.carrier_hz, c.am_rate_hz, c.pitch_slope_hz_per_s, c.noise_level})
             .second)
      throw std::invalid_argument("synth: class parameter tuples must be pairwise distinct");
}

AudioClip synth_clip(const SynthSpec& spec, int class_idx, int item_idx) {
  spec.validate();
  if (class_idx < 0 || class_idx >= spec.n_classes)
    throw std::invalid_argument("synth: class index out of range");
  if (item_idx < 0 || item_idx >= spec.per_class)
    throw std::invalid_argument("synth: item index out of range");

  const SynthClassParams& p = spec.classes[static_cast<std::size_t>(class_idx)];
  const std::uint64_t file_index =
      static_cast<std::uint64_t>(class_idx) * static_cast<std::uint64_t>(spec.per_class) +
      static_cast<std::uint64_t>(item_idx);
  Rng rng(derive_seed(spec.seed, file_index));

  const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double am_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double amplitude = rng.uniform(0.40, 0.60);
  const double am_depth = rng.uniform(0.35, 0.65);

  const double T = spec.duration_s;
  const int sr = spec.sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(T * sr));

  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.resize(n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    // Instantaneous frequency carrier + slope*(t - T/2); phase is its integral.
    const double phase =
        two_pi * (p.carrier_hz * t +
                  p.pitch_slope_hz_per_s * (0.5 * t * t - 0.5 * T * t)) +
        phase0;
    const double am = 1.0 + am_depth * std::cos(two_pi * p.am_rate_hz * t + am_phase);
    double s = amplitude * am * std::sin(phase);
    if (p.noise_level > 0.0) s += p.noise_level * rng.normal();
    clip.samples[i] = std::clamp(s, -1.0, 1.0);
  }
  return clip;
}

Manifest synth_corpus(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  Manifest manifest;
  char name[64];
  for (int k = 0; k < spec.n_classes; ++k) {
    for (int i = 0; i < spec.per_class; ++i) {
      std::snprintf(name, sizeof(name), "c%02d_n%04d.wav", k, i);
      const std::string path = (std::filesystem::path(out_dir) / name).string();
      save_wav_pcm16(path, synth_clip(spec, k, i));

      ExampleMeta meta;
      meta.path = path;
      meta.dataset = SourceDataset::synth;
      meta.actor = std::to_string(i);
      meta.emotion = static_cast<Emotion>(k);
      manifest.examples.push_back(std::move(meta));
    }
  }
  return manifest;
}

}  // namespace ser
