#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ser/audio.hpp"
#include "ser/tensor.hpp"

namespace ser::dsp {

using cplx = std::complex<double>;

// In-place iterative radix-2 Cooley-Tukey with bit-reversal permutation.
// Forward applies no normalization; inverse divides by N.
void fft_radix2(std::vector<cplx>& buf, bool inverse);

// STFT power, rows = n_fft/2+1 bins, cols = frames.
struct PowerSpectrogram {
  Tensor values;
  double bin_hz = 0.0;
  std::size_t hop = 0;
  std::size_t n_bins() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
};

// Center framing: reflect-pad by n_fft/2 on both ends, Hann window,
// power = |X|^2, n_frames = 1 + floor(len/hop).
PowerSpectrogram stft(const AudioClip& clip, std::size_t n_fft = 2048,
                      std::size_t hop = 512);

// HTK mel scale: m = 2595 * log10(1 + f/700).
double hz_to_mel(double f);
double mel_to_hz(double m);

// Triangular filters, n_mels x (n_fft/2+1). Knots are n_mels+2 points
// equispaced in mel; each row is scaled so its max sampled weight is 1.
Tensor mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sr,
                      double fmin, double fmax);

struct LogMelSpectrogram {
  Tensor values;  // n_mels x n_frames, dB
  std::size_t n_mels() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
};

// fb * power, then 10*log10(max(., 1e-10)); floor is -100 dB.
LogMelSpectrogram log_mel(const PowerSpectrogram& ps, const Tensor& fb);

// Orthonormal DCT-II. D * D^T = I.
std::vector<double> dct2_orthonormal(const std::vector<double>& x);

struct MfccMatrix {
  Tensor values;  // n_mfcc x n_frames
  std::size_t n_mfcc() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
};

// Per-frame orthonormal DCT-II down the mel axis, keeping the first
// n_mfcc coefficients.
MfccMatrix mfcc(const LogMelSpectrogram& lm, std::size_t n_mfcc = 20);

// Arithmetic mean across the frame axis.
std::vector<double> time_average(const MfccMatrix& m);

// Corner-aligned bilinear resize of a 2-d matrix.
Tensor resize_bilinear(const Tensor& img, std::size_t h, std::size_t w);

// Maps min -> 0 and max -> 1; a constant matrix maps to all 0.5.
Tensor minmax_normalize(const Tensor& img);

}  // namespace ser::dsp
