#include "ser/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ser::dsp {

namespace {

constexpr double kPowerFloor = 1e-10;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Fold an arbitrary index into [0, n-1] mirror-style without repeating
// the edge samples (period 2n-2).
std::size_t reflect_index(long long i, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long j = i % period;
  if (j < 0) j += period;
  return static_cast<std::size_t>(j < n ? j : period - j);
}

}  // namespace

void fft_radix2(std::vector<cplx>& buf, bool inverse) {
  const std::size_t n = buf.size();
  if (!is_pow2(n))
    throw std::invalid_argument("fft_radix2: length " + std::to_string(n) +
                                " is not a power of two");
  if (n == 1) return;

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = buf[i + k];
        const cplx v = buf[i + k + len / 2] * w;
        buf[i + k] = u + v;
        buf[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (cplx& x : buf) x *= inv_n;
  }
}

PowerSpectrogram stft(const AudioClip& clip, std::size_t n_fft, std::size_t hop) {
  if (!is_pow2(n_fft)) throw std::invalid_argument("stft: n_fft must be a power of two");
  if (hop == 0) throw std::invalid_argument("stft: hop must be > 0");
  if (clip.samples.empty()) throw std::invalid_argument("stft: empty clip");

  const std::size_t len = clip.samples.size();
  const std::size_t n_bins = n_fft / 2 + 1;
  const std::size_t n_frames = 1 + len / hop;
  const long long pad = static_cast<long long>(n_fft) / 2;

  // Periodic Hann.
  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(n_fft)));

  PowerSpectrogram ps;
  ps.values = Tensor({n_bins, n_frames});
  ps.bin_hz = static_cast<double>(clip.sample_rate) / static_cast<double>(n_fft);
  ps.hop = hop;

  std::vector<cplx> buf(n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const long long start = static_cast<long long>(t * hop) - pad;
    for (std::size_t i = 0; i < n_fft; ++i) {
      const std::size_t src = reflect_index(start + static_cast<long long>(i),
                                            static_cast<long long>(len));
      buf[i] = clip.samples[src] * window[i];
    }
    fft_radix2(buf, false);
    for (std::size_t b = 0; b < n_bins; ++b) ps.values(b, t) = std::norm(buf[b]);
  }
  return ps;
}

double hz_to_mel(double f) {
  if (f < 0.0) throw std::invalid_argument("hz_to_mel: negative frequency");
  return 2595.0 * std::log10(1.0 + f / 700.0);
}

double mel_to_hz(double m) {
  if (m < 0.0) throw std::invalid_argument("mel_to_hz: negative mel");
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

Tensor mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sr,
                      double fmin, double fmax) {
  if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels must be >= 1");
  if (sr <= 0) throw std::invalid_argument("mel_filterbank: sr must be > 0");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sr / 2.0))
    throw std::invalid_argument("mel_filterbank: need 0 <= fmin < fmax <= sr/2");

  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);

  // n_mels+2 knots equispaced in mel, mapped back to Hz.
  std::vector<double> knots(n_mels + 2);
  for (std::size_t i = 0; i < knots.size(); ++i)
    knots[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));

  Tensor fb({n_mels, n_bins});
  const double bin_hz = static_cast<double>(sr) / static_cast<double>(n_fft);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = knots[m], mid = knots[m + 1], hi = knots[m + 2];
    double row_max = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = bin_hz * static_cast<double>(b);
      double w = 0.0;
      if (f > lo && f < hi)
        w = std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid));
      else if (f == mid)
        w = 1.0;
      fb(m, b) = w;
      row_max = std::max(row_max, w);
    }
    if (row_max > 0.0)
      for (std::size_t b = 0; b < n_bins; ++b) fb(m, b) /= row_max;
  }
  return fb;
}

LogMelSpectrogram log_mel(const PowerSpectrogram& ps, const Tensor& fb) {
  if (fb.ndim() != 2 || fb.cols() != ps.values.rows())
    throw std::invalid_argument("log_mel: filterbank columns " + fb.shape_str() +
                                " do not match spectrogram rows " + ps.values.shape_str());
  Tensor mel = matmul(fb, ps.values);
  for (double& v : mel.data) v = 10.0 * std::log10(std::max(v, kPowerFloor));
  LogMelSpectrogram lm;
  lm.values = std::move(mel);
  return lm;
}

std::vector<double> dct2_orthonormal(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  if (n == 0) return y;
  const double s0 = std::sqrt(1.0 / static_cast<double>(n));
  const double sk = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) /
                             (2.0 * static_cast<double>(n)));
    y[k] = acc * (k == 0 ? s0 : sk);
  }
  return y;
}

MfccMatrix mfcc(const LogMelSpectrogram& lm, std::size_t n_mfcc) {
  const std::size_t n_mels = lm.n_mels();
  if (n_mfcc > n_mels)
    throw std::invalid_argument("mfcc: n_mfcc " + std::to_string(n_mfcc) +
                                " exceeds n_mels " + std::to_string(n_mels));

  // DCT basis rows for the kept coefficients, applied as one GEMM.
  Tensor basis({n_mfcc, n_mels});
  const double s0 = std::sqrt(1.0 / static_cast<double>(n_mels));
  const double sk = std::sqrt(2.0 / static_cast<double>(n_mels));
  for (std::size_t k = 0; k < n_mfcc; ++k)
    for (std::size_t i = 0; i < n_mels; ++i)
      basis(k, i) = (k == 0 ? s0 : sk) *
                    std::cos(std::numbers::pi * static_cast<double>(k) *
                             (2.0 * static_cast<double>(i) + 1.0) /
                             (2.0 * static_cast<double>(n_mels)));

  MfccMatrix out;
  out.values = matmul(basis, lm.values);
  return out;
}

std::vector<double> time_average(const MfccMatrix& m) {
  const std::size_t rows = m.values.rows();
  const std::size_t cols = m.values.cols();
  if (cols == 0) throw std::invalid_argument("time_average: zero frames");
  std::vector<double> mean(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += m.values(r, c);
    mean[r] = acc / static_cast<double>(cols);
  }
  return mean;
}

Tensor resize_bilinear(const Tensor& img, std::size_t h, std::size_t w) {
  if (img.ndim() != 2 || img.empty())
    throw std::invalid_argument("resize_bilinear: need a nonempty 2-d matrix");
  if (h == 0 || w == 0) throw std::invalid_argument("resize_bilinear: zero target dim");

  const std::size_t ih = img.rows(), iw = img.cols();
  Tensor out({h, w});
  for (std::size_t r = 0; r < h; ++r) {
    const double sy = (h > 1 && ih > 1)
                          ? static_cast<double>(r) * (ih - 1) / (h - 1)
                          : 0.0;
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, ih - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t c = 0; c < w; ++c) {
      const double sx = (w > 1 && iw > 1)
                            ? static_cast<double>(c) * (iw - 1) / (w - 1)
                            : 0.0;
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, iw - 1);
      const double fx = sx - static_cast<double>(x0);
      out(r, c) = img(y0, x0) * (1 - fy) * (1 - fx) + img(y0, x1) * (1 - fy) * fx +
                  img(y1, x0) * fy * (1 - fx) + img(y1, x1) * fy * fx;
    }
  }
  return out;
}

Tensor minmax_normalize(const Tensor& img) {
  if (img.empty()) throw std::invalid_argument("minmax_normalize: empty matrix");
  const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it, hi = *hi_it;
  Tensor out = img;
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (double& v : out.data) v = (v - lo) * inv;
  } else {
    out.fill(0.5);
  }
  return out;
}

}  // namespace ser::dsp
