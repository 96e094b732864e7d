#pragma once

// Direct, unoptimized reference computations for the audio descriptors. The
// formulas are written out independently of the library: O(N²) DFT, mel
// scale in its natural-log form, and a plain DCT-II sum.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

inline std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = std::pow(std::sin(std::numbers::pi * i / (n - 1)), 2);
  return w;
}

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// |X[k]| for k = 0 … n_fft/2 of x zero-padded to n_fft.
inline std::vector<double> dft_magnitude(const std::vector<double>& x, int n_fft) {
  std::vector<double> mag(static_cast<std::size_t>(n_fft / 2 + 1));
  for (int k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n)
      acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * static_cast<double>(n) / n_fft);
    mag[static_cast<std::size_t>(k)] = std::abs(acc);
  }
  return mag;
}

inline double mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
inline double inverse_mel(double m) { return 700.0 * std::expm1(m / 1127.0); }

/// Energy in triangular band b (of `bands`) spanning 0 … rate/2 on the mel scale.
inline double band_energy(const std::vector<double>& power, int b, int bands, int n_fft, int rate) {
  const double step = mel(rate / 2.0) / (bands + 1);
  const double left = inverse_mel(step * b), centre = inverse_mel(step * (b + 1)), right = inverse_mel(step * (b + 2));
  double e = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * rate / n_fft;
    double weight = 0.0;
    if (f > left && f <= centre) weight = (f - left) / (centre - left);
    else if (f > centre && f < right) weight = (right - f) / (right - centre);
    e += weight * power[k];
  }
  return e;
}

/// Coefficients 1 … count of the orthonormal DCT-II of log mel energies.
inline std::vector<double> mfcc(const std::vector<double>& frame, int rate, int bands = 26, int count = 12) {
  const int n = static_cast<int>(frame.size());
  const int n_fft = next_pow2(n);
  const auto w = hann(n);
  std::vector<double> x(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] * w[i];
  const auto mag = dft_magnitude(x, n_fft);
  std::vector<double> power(mag.size());
  for (std::size_t k = 0; k < mag.size(); ++k) power[k] = mag[k] * mag[k];
  std::vector<double> log_e(static_cast<std::size_t>(bands));
  for (int b = 0; b < bands; ++b)
    log_e[static_cast<std::size_t>(b)] = std::log(std::max(band_energy(power, b, bands, n_fft, rate), 1e-10));
  std::vector<double> out;
  for (int j = 1; j <= count; ++j) {
    double c = 0.0;
    for (int m = 0; m < bands; ++m)
      c += log_e[static_cast<std::size_t>(m)] * std::cos(std::numbers::pi * j * (2 * m + 1) / (2.0 * bands));
    out.push_back(c * std::sqrt(2.0 / bands));
  }
  return out;
}

/// Magnitude-weighted mean frequency of the windowed frame.
inline double centroid(const std::vector<double>& frame, int rate) {
  const int n = static_cast<int>(frame.size());
  const int n_fft = next_pow2(n);
  const auto w = hann(n);
  std::vector<double> x(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] * w[i];
  const auto mag = dft_magnitude(x, n_fft);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    num += mag[k] * static_cast<double>(k) * rate / n_fft;
    den += mag[k];
  }
  return den > 0 ? num / den : 0.0;
}

/// Geometric over arithmetic mean of the nonzero magnitude bins.
inline double flatness(const std::vector<double>& frame) {
  const int n = static_cast<int>(frame.size());
  const auto w = hann(n);
  std::vector<double> x(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) x[i] = frame[i] * w[i];
  const auto mag = dft_magnitude(x, next_pow2(n));
  double log_sum = 0.0, sum = 0.0;
  int count = 0;
  for (double m : mag)
    if (m > 0) {
      log_sum += std::log(m);
      sum += m;
      ++count;
    }
  return count ? std::exp(log_sum / count) / (sum / count) : 0.0;
}

}  // namespace oracle
