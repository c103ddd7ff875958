#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ser/audio.hpp"
#include "ser/rng.hpp"

using ser::AudioClip;
using ser::WavError;

namespace {

void push_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 24) & 0xff);
}

void push_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(x & 0xff);
  v.push_back((x >> 8) & 0xff);
}

void push_tag(std::vector<std::uint8_t>& v, const char* tag) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<std::uint8_t>(tag[i]));
}

// Hand-rolled PCM16 WAV bytes, independent of the library writer.
std::vector<std::uint8_t> make_pcm16_wav(const std::vector<std::int16_t>& samples,
                                         int channels, std::uint32_t sr) {
  std::vector<std::uint8_t> v;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size()) * 2;
  push_tag(v, "RIFF");
  push_u32(v, 36 + data_bytes);
  push_tag(v, "WAVE");
  push_tag(v, "fmt ");
  push_u32(v, 16);
  push_u16(v, 1);  // PCM
  push_u16(v, static_cast<std::uint16_t>(channels));
  push_u32(v, sr);
  push_u32(v, sr * channels * 2);
  push_u16(v, static_cast<std::uint16_t>(channels * 2));
  push_u16(v, 16);
  push_tag(v, "data");
  push_u32(v, data_bytes);
  for (std::int16_t s : samples) push_u16(v, static_cast<std::uint16_t>(s));
  return v;
}

}  // namespace

TEST_CASE("parse_wav scales 16-bit mono samples by 1/32768") {
  auto bytes = make_pcm16_wav({0, 16384, -16384, 32767}, 1, 22050);
  AudioClip clip = ser::parse_wav(bytes);
  REQUIRE(clip.samples.size() == 4);
  CHECK(clip.sample_rate == 22050);
  CHECK(clip.samples[0] == 0.0);
  CHECK(clip.samples[1] == 0.5);
  CHECK(clip.samples[2] == -0.5);
  CHECK(clip.samples[3] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
}

TEST_CASE("parse_wav downmixes stereo by channel mean") {
  // L=1.0 (as 32767 ~ 0.99997), use exact halves instead: L=16384, R=0.
  auto bytes = make_pcm16_wav({16384, 0}, 2, 44100);
  AudioClip clip = ser::parse_wav(bytes);
  REQUIRE(clip.samples.size() == 1);
  CHECK(clip.samples[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("parse_wav rejects missing data chunk") {
  auto bytes = make_pcm16_wav({0, 0}, 1, 22050);
  bytes.resize(36);  // chop off the data chunk entirely
  push_u32(bytes, 0);
  bytes[4] = 28;  // fix RIFF size few care about; parser scans chunks
  try {
    ser::parse_wav(bytes);
    FAIL("expected WavError");
  } catch (const WavError& e) {
    CHECK(e.kind() == WavError::Kind::TruncatedChunk);
    CHECK(e.chunk() == "data");
  }
}

TEST_CASE("parse_wav rejects truncated data payload") {
  auto bytes = make_pcm16_wav({100, 200, 300, 400}, 1, 22050);
  bytes.resize(bytes.size() - 4);  // lose two samples but keep the declared size
  try {
    ser::parse_wav(bytes);
    FAIL("expected WavError");
  } catch (const WavError& e) {
    CHECK(e.kind() == WavError::Kind::TruncatedChunk);
    CHECK(e.chunk() == "data");
  }
}

TEST_CASE("parse_wav rejects junk and unsupported formats") {
  std::vector<std::uint8_t> junk{'J', 'U', 'N', 'K', 0, 0, 0, 0};
  CHECK_THROWS_AS(ser::parse_wav(junk), WavError);

  auto mulaw = make_pcm16_wav({0, 0}, 1, 22050);
  mulaw[20] = 7;  // format code mu-law
  CHECK_THROWS_AS(ser::parse_wav(mulaw), WavError);

  auto threechan = make_pcm16_wav({0, 0, 0}, 3, 22050);
  CHECK_THROWS_AS(ser::parse_wav(threechan), WavError);
}

TEST_CASE("pcm16 round trip is identity within one lsb") {
  ser::Rng rng(77);
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.resize(400);
  for (auto& s : clip.samples) s = rng.uniform(-1.0, 1.0);
  AudioClip back = ser::parse_wav(ser::write_wav_pcm16(clip));
  REQUIRE(back.samples.size() == clip.samples.size());
  CHECK(back.sample_rate == 16000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    CHECK(std::fabs(back.samples[i] - clip.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("float32 round trip is near exact") {
  ser::Rng rng(78);
  AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples.resize(128);
  for (auto& s : clip.samples) s = rng.uniform(-1.0, 1.0);
  AudioClip back = ser::parse_wav(ser::write_wav_float32(clip));
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    CHECK(back.samples[i] == doctest::Approx(clip.samples[i]).epsilon(1e-7));
}

TEST_CASE("resample at the same rate is the identity") {
  AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples = {0.1, -0.2, 0.3};
  AudioClip out = ser::resample(clip, 22050);
  CHECK(out.samples == clip.samples);
}

TEST_CASE("resample interpolates under the corner-aligned map") {
  AudioClip clip;
  clip.sample_rate = 2;
  clip.samples = {0.0, 1.0};
  AudioClip out = ser::resample(clip, 4);
  REQUIRE(out.samples.size() == 4);
  CHECK(out.sample_rate == 4);
  CHECK(out.samples[0] == doctest::Approx(0.0));
  CHECK(out.samples[1] == doctest::Approx(1.0 / 3.0));
  CHECK(out.samples[2] == doctest::Approx(2.0 / 3.0));
  CHECK(out.samples[3] == doctest::Approx(1.0));
}

TEST_CASE("resample rejects a zero target rate") {
  AudioClip clip;
  clip.samples = {0.0};
  CHECK_THROWS_AS(ser::resample(clip, 0), std::invalid_argument);
}

TEST_CASE("resample keeps a 100 Hz tone at 100 Hz") {
  const int sr_in = 22050, sr_out = 16000;
  AudioClip clip;
  clip.sample_rate = sr_in;
  clip.samples.resize(sr_in);
  for (int i = 0; i < sr_in; ++i)
    clip.samples[i] = std::sin(2.0 * std::numbers::pi * 100.0 * i / sr_in);
  AudioClip out = ser::resample(clip, sr_out);
  CHECK(std::llabs(static_cast<long long>(out.samples.size()) - sr_out) <= 1);

  // Dominant bin of a naive DFT over the first 4096 samples.
  const std::size_t n = 4096;
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = out.samples[i];
  auto spec = oracle::naive_dft(buf);
  std::size_t best = 1;
  for (std::size_t k = 1; k < n / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  const double peak_hz = static_cast<double>(best) * sr_out / n;
  CHECK(peak_hz == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("fix_duration pads symmetrically and crops centrally") {
  AudioClip clip;
  clip.sample_rate = 4;

  SUBCASE("exact length passes through") {
    clip.samples = {1, 2, 3, 4};
    AudioClip out = ser::fix_duration(clip, 1.0);
    CHECK(out.samples == clip.samples);
  }
  SUBCASE("short clip gets symmetric zero pad") {
    clip.samples = {1, 1};  // 0.5 s at 4 Hz -> pad to 1 s
    AudioClip out = ser::fix_duration(clip, 1.0);
    REQUIRE(out.samples.size() == 4);
    CHECK(out.samples[0] == 0.0);
    CHECK(out.samples[1] == 1.0);
    CHECK(out.samples[2] == 1.0);
    CHECK(out.samples[3] == 0.0);
  }
  SUBCASE("long clip keeps the middle") {
    clip.samples = {1, 2, 3, 4, 5, 6};  // 1.5 s -> keep middle 1.0 s
    AudioClip out = ser::fix_duration(clip, 1.0);
    REQUIRE(out.samples.size() == 4);
    CHECK(out.samples[0] == 2.0);
    CHECK(out.samples[3] == 5.0);
  }
  SUBCASE("empty clip becomes zeros") {
    clip.samples.clear();
    AudioClip out = ser::fix_duration(clip, 1.0);
    REQUIRE(out.samples.size() == 4);
    for (double s : out.samples) CHECK(s == 0.0);
  }
}
