#include "ser/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ser {

namespace {

std::uint16_t read_u16le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void push_u16le(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(static_cast<std::uint8_t>(x & 0xff));
  v.push_back(static_cast<std::uint8_t>(x >> 8));
}

void push_u32le(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xff));
}

float read_f32le(const std::uint8_t* p) {
  std::uint32_t bits = read_u32le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

struct FmtInfo {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

AudioClip parse_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0)
    throw WavError(WavError::Kind::NotRiff, "RIFF", "missing RIFF header");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw WavError(WavError::Kind::NotWave, "WAVE", "missing WAVE tag");

  FmtInfo fmt;
  bool have_fmt = false;
  const std::uint8_t* data_ptr = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    char id[5] = {0};
    std::memcpy(id, bytes.data() + pos, 4);
    const std::uint32_t size = read_u32le(bytes.data() + pos + 4);
    pos += 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16 || pos + 16 > bytes.size())
        throw WavError(WavError::Kind::BadFmtChunk, "fmt ", "fmt chunk too short");
      const std::uint8_t* p = bytes.data() + pos;
      fmt.format = read_u16le(p);
      fmt.channels = read_u16le(p + 2);
      fmt.sample_rate = read_u32le(p + 4);
      fmt.bits = read_u16le(p + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (pos + size > bytes.size())
        throw WavError(WavError::Kind::TruncatedChunk, "data",
                       "data chunk shorter than declared size");
      data_ptr = bytes.data() + pos;
      data_size = size;
      have_data = true;
    }
    // Chunks are word-aligned; odd sizes carry a pad byte.
    pos += size + (size & 1);
  }

  if (!have_fmt)
    throw WavError(WavError::Kind::MissingFmt, "fmt ", "no fmt chunk");
  if (!have_data)
    throw WavError(WavError::Kind::TruncatedChunk, "data", "no data chunk");

  if (fmt.format != 1 && fmt.format != 3)
    throw WavError(WavError::Kind::UnsupportedCodec, "fmt ",
                   "unsupported codec tag " + std::to_string(fmt.format));
  if (fmt.format == 1 && fmt.bits != 16)
    throw WavError(WavError::Kind::UnsupportedBitDepth, "fmt ",
                   "PCM must be 16-bit, got " + std::to_string(fmt.bits));
  if (fmt.format == 3 && fmt.bits != 32)
    throw WavError(WavError::Kind::UnsupportedBitDepth, "fmt ",
                   "float must be 32-bit, got " + std::to_string(fmt.bits));
  if (fmt.channels != 1 && fmt.channels != 2)
    throw WavError(WavError::Kind::UnsupportedChannels, "fmt ",
                   "expected 1 or 2 channels, got " + std::to_string(fmt.channels));
  if (fmt.sample_rate == 0)
    throw WavError(WavError::Kind::BadFmtChunk, "fmt ", "zero sample rate");

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_size = bytes_per_sample * fmt.channels;
  if (data_size % frame_size != 0)
    throw WavError(WavError::Kind::TruncatedChunk, "data", "partial trailing frame");

  const std::size_t n_frames = data_size / frame_size;
  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.samples.resize(n_frames);

  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t ch = 0; ch < fmt.channels; ++ch) {
      const std::uint8_t* p = data_ptr + (i * fmt.channels + ch) * bytes_per_sample;
      if (fmt.format == 1) {
        const std::int16_t v = static_cast<std::int16_t>(read_u16le(p));
        acc += v / 32768.0;
      } else {
        acc += read_f32le(p);
      }
    }
    clip.samples[i] = std::clamp(acc / fmt.channels, -1.0, 1.0);
  }
  return clip;
}

AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  AudioClip clip = parse_wav(bytes);
  clip.source = path;
  return clip;
}

std::vector<std::uint8_t> write_wav_pcm16(const AudioClip& clip) {
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_size = n * 2;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  push_u32le(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  push_u32le(out, 16);
  push_u16le(out, 1);  // PCM
  push_u16le(out, 1);  // mono
  push_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  push_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  push_u16le(out, 2);
  push_u16le(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  push_u32le(out, data_size);
  for (double s : clip.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const long q = std::lround(clamped * 32768.0);
    const std::int16_t v = static_cast<std::int16_t>(std::clamp(q, -32768l, 32767l));
    push_u16le(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

std::vector<std::uint8_t> write_wav_float32(const AudioClip& clip) {
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_size = n * 4;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  push_u32le(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  push_u32le(out, 16);
  push_u16le(out, 3);  // IEEE float
  push_u16le(out, 1);
  push_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  push_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 4);
  push_u16le(out, 4);
  push_u16le(out, 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  push_u32le(out, data_size);
  for (double s : clip.samples) {
    const float f = static_cast<float>(std::clamp(s, -1.0, 1.0));
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    push_u32le(out, bits);
  }
  return out;
}

void save_wav_pcm16(const std::string& path, const AudioClip& clip) {
  const auto bytes = write_wav_pcm16(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

AudioClip resample(const AudioClip& clip, int target_sr) {
  if (target_sr <= 0) throw std::invalid_argument("resample: target_sr must be > 0");
  if (target_sr == clip.sample_rate) return clip;

  const std::size_t n = clip.samples.size();
  AudioClip out;
  out.sample_rate = target_sr;
  out.source = clip.source;
  if (n == 0) return out;

  const std::size_t m = static_cast<std::size_t>(std::llround(
      static_cast<double>(n) * target_sr / clip.sample_rate));
  out.samples.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = (m > 1 && n > 1)
                           ? static_cast<double>(i) * (n - 1) / (m - 1)
                           : 0.0;
    const std::size_t i0 = static_cast<std::size_t>(pos);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = clip.samples[i0] * (1.0 - frac) + clip.samples[i1] * frac;
  }
  return out;
}

AudioClip fix_duration(const AudioClip& clip, double seconds) {
  if (seconds <= 0.0) throw std::invalid_argument("fix_duration: seconds must be > 0");
  const std::size_t target =
      static_cast<std::size_t>(std::llround(seconds * clip.sample_rate));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.source = clip.source;
  out.samples.assign(target, 0.0);

  const std::size_t n = clip.samples.size();
  if (n >= target) {
    const std::size_t start = (n - target) / 2;
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), target,
                out.samples.begin());
  } else {
    const std::size_t left = (target - n) / 2;
    std::copy(clip.samples.begin(), clip.samples.end(),
              out.samples.begin() + static_cast<std::ptrdiff_t>(left));
  }
  return out;
}

}  // namespace ser
