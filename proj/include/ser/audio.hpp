#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ser {

// Mono floating-point audio, the raw input unit of the whole pipeline.
struct AudioClip {
  std::vector<double> samples;  // each in [-1, 1]
  int sample_rate = 22050;      // Hz, > 0
  std::string source;           // origin path, may be empty

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

class WavError : public std::runtime_error {
 public:
  enum class Kind {
    NotRiff,
    NotWave,
    MissingFmt,
    BadFmtChunk,
    UnsupportedCodec,
    UnsupportedBitDepth,
    UnsupportedChannels,
    TruncatedChunk,
  };

  WavError(Kind kind, std::string chunk, const std::string& detail)
      : std::runtime_error("wav: " + detail + " (chunk '" + chunk + "')"),
        kind_(kind),
        chunk_(std::move(chunk)) {}

  Kind kind() const { return kind_; }
  const std::string& chunk() const { return chunk_; }

 private:
  Kind kind_;
  std::string chunk_;
};

// RIFF/WAVE parser: PCM 16-bit or IEEE-float 32-bit, 1 or 2 channels.
// Stereo is downmixed by channel mean; 16-bit samples scale by 1/32768.
AudioClip parse_wav(const std::vector<std::uint8_t>& bytes);
AudioClip load_wav(const std::string& path);

std::vector<std::uint8_t> write_wav_pcm16(const AudioClip& clip);
std::vector<std::uint8_t> write_wav_float32(const AudioClip& clip);
void save_wav_pcm16(const std::string& path, const AudioClip& clip);

// Linear interpolation under the corner-aligned index map i*(N-1)/(M-1).
// Output length is round(len * target/source); equal rates pass through.
AudioClip resample(const AudioClip& clip, int target_sr);

// Center-crop when longer, symmetric zero-pad when shorter. Output length
// is exactly round(seconds * sample_rate) for every input, including empty.
AudioClip fix_duration(const AudioClip& clip, double seconds);

}  // namespace ser
