#include "polyfuse/audio/descriptors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "polyfuse/core/error.hpp"

namespace polyfuse::audio {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1)));
    std::lock_guard lock(plan_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(plan_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Magnitudes of the zero-padded input.
  void magnitudes(const double* x, int length, double* mag) {
    std::fill(in_, in_ + n_, 0.0);
    std::copy(x, x + length, in_);
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) mag[k] = std::hypot(out_[k][0], out_[k][1]);
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n == 1) return w;
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

MatrixXdR FrameMatrix::windowed() const {
  MatrixXdR out = frames;
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) *= window[static_cast<std::size_t>(c)];
  return out;
}

FrameMatrix frame_signal(const AudioSignal& signal, const FramingConfig& config) {
  if (config.frame_length <= 0.0 || config.hop <= 0.0)
    throw Error(ErrorCode::ConfigError, "frame length and hop must be positive");
  const double rate = signal.sample_rate;
  const auto frame_samples = static_cast<Eigen::Index>(std::lround(config.frame_length * rate));
  const double hop_samples = config.hop * rate;
  const auto len = static_cast<Eigen::Index>(signal.samples.size());
  if (len < frame_samples)
    throw Error(ErrorCode::TooShort, "signal of " + std::to_string(len) + " samples is shorter than one frame (" +
                                         std::to_string(frame_samples) + ")");
  const auto count = static_cast<Eigen::Index>(std::floor(static_cast<double>(len - frame_samples) / hop_samples)) + 1;
  FrameMatrix fm;
  fm.sample_rate = signal.sample_rate;
  fm.hop = config.hop;
  fm.window = hann_window(static_cast<int>(frame_samples));
  fm.frames.resize(count, frame_samples);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto start = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::llround(static_cast<double>(i) * hop_samples)),
                                              len - frame_samples);
    for (Eigen::Index j = 0; j < frame_samples; ++j) fm.frames(i, j) = signal.samples[static_cast<std::size_t>(start + j)];
  }
  return fm;
}

Eigen::Index LldMatrix::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorCode::ValidationError, "no descriptor named " + name);
  return it - names.begin();
}

std::vector<std::string> descriptor_names(const LldConfig& config) {
  std::vector<std::string> names = {"rms", "intensity", "loudness", "pitch", "voicing", "centroid", "flux", "flatness"};
  for (int k = 1; k <= config.mfcc_count; ++k) names.push_back("mfcc" + std::to_string(k));
  return names;
}

int fft_size(int n) {
  int size = 1;
  while (size < n) size *= 2;
  return size;
}

MatrixXdR mel_filterbank(int bands, int n_fft, int sample_rate) {
  const int bins = n_fft / 2 + 1;
  MatrixXdR fb = MatrixXdR::Zero(bands, bins);
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bands + 2));
  for (int i = 0; i < bands + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(top * i / (bands + 1));
  for (int m = 0; m < bands; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      if (f > lo && f < hi) fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

std::vector<double> magnitude_spectrum(const double* windowed, int length, int n_fft) {
  RealFft fft(n_fft);
  std::vector<double> mag(static_cast<std::size_t>(n_fft / 2 + 1));
  fft.magnitudes(windowed, length, mag.data());
  return mag;
}

PitchEstimate estimate_pitch(const double* frame, int length, int sample_rate, const LldConfig& config) {
  std::vector<double> x(frame, frame + length);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= length;
  double energy = 0.0;
  for (double& v : x) {
    v -= mean;
    energy += v * v;
  }
  if (energy < 1e-20) return {};

  const int min_lag = std::max(2, static_cast<int>(std::floor(sample_rate / config.pitch_max)));
  const int max_lag = std::min(length / 2, static_cast<int>(std::ceil(sample_rate / config.pitch_min)));
  if (max_lag <= min_lag) return {};
  // r[k] holds lags min_lag - 1 … max_lag + 1 so every candidate has neighbours.
  std::vector<double> r(static_cast<std::size_t>(max_lag - min_lag + 3), 0.0);
  for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (int n = 0; n + lag < length; ++n) {
      xy += x[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(n + lag)];
      xx += x[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(n)];
      yy += x[static_cast<std::size_t>(n + lag)] * x[static_cast<std::size_t>(n + lag)];
    }
    r[static_cast<std::size_t>(lag - min_lag + 1)] = xx > 0.0 && yy > 0.0 ? xy / std::sqrt(xx * yy) : 0.0;
  }
  auto at = [&](int lag) { return r[static_cast<std::size_t>(lag - min_lag + 1)]; };
  double peak = -1.0;
  for (int lag = min_lag; lag <= max_lag; ++lag) peak = std::max(peak, at(lag));
  if (peak <= 0.0) return {};
  // Shortest lag that is a local maximum close to the global peak; avoids
  // picking a multiple of the period.
  int best = -1;
  for (int lag = min_lag; lag <= max_lag && best < 0; ++lag)
    if (at(lag) >= 0.9 * peak && at(lag) >= at(lag - 1) && at(lag) >= at(lag + 1)) best = lag;
  if (best < 0) return {0.0, std::min(peak, 1.0)};
  const double a = at(best - 1), b = at(best), c = at(best + 1);
  const double denom = a - 2.0 * b + c;
  const double shift = std::abs(denom) > 1e-15 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
  PitchEstimate est;
  est.voicing = std::clamp(b, 0.0, 1.0);
  est.frequency = est.voicing >= config.voicing_threshold ? sample_rate / (best + shift) : 0.0;
  return est;
}

LldMatrix extract_llds(const FrameMatrix& fm, const LldConfig& config) {
  const auto n_frames = fm.count();
  const auto length = static_cast<int>(fm.frame_samples());
  if (n_frames == 0) throw Error(ErrorCode::TooShort, "no frames to describe");
  const int n_fft = fft_size(length);
  const int bins = n_fft / 2 + 1;
  const MatrixXdR fb = mel_filterbank(config.mel_bands, n_fft, fm.sample_rate);

  LldMatrix out;
  out.names = descriptor_names(config);
  out.frame_hop = fm.hop;
  out.values = MatrixXdR::Zero(n_frames, static_cast<Eigen::Index>(out.names.size()));

  RealFft fft(n_fft);
  std::vector<double> windowed(static_cast<std::size_t>(length));
  std::vector<double> mag(static_cast<std::size_t>(bins));
  std::vector<double> prev_norm(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(bins));
  std::vector<double> log_mel(static_cast<std::size_t>(config.mel_bands));
  const double M = config.mel_bands;

  for (Eigen::Index i = 0; i < n_frames; ++i) {
    const double* raw = fm.frames.row(i).data();
    auto row = out.values.row(i);

    double sq = 0.0;
    for (int n = 0; n < length; ++n) sq += raw[n] * raw[n];
    const double rms = std::sqrt(sq / length);
    row(0) = rms;
    row(1) = 10.0 * std::log10(sq / length + 1e-12);
    row(2) = std::pow(rms, 0.3);

    const PitchEstimate pitch = estimate_pitch(raw, length, fm.sample_rate, config);
    row(3) = pitch.frequency;
    row(4) = pitch.voicing;

    for (int n = 0; n < length; ++n) windowed[static_cast<std::size_t>(n)] = raw[n] * fm.window[static_cast<std::size_t>(n)];
    fft.magnitudes(windowed.data(), length, mag.data());

    double total = 0.0, weighted = 0.0, log_sum = 0.0;
    int nonzero = 0;
    for (int k = 0; k < bins; ++k) {
      const double m = mag[static_cast<std::size_t>(k)];
      total += m;
      weighted += m * k * static_cast<double>(fm.sample_rate) / n_fft;
      if (m > 0.0) {
        log_sum += std::log(m);
        ++nonzero;
      }
    }
    row(5) = total > 0.0 ? weighted / total : 0.0;

    double flux = 0.0;
    for (int k = 0; k < bins; ++k) {
      norm[static_cast<std::size_t>(k)] = total > 0.0 ? mag[static_cast<std::size_t>(k)] / total : 0.0;
      const double d = norm[static_cast<std::size_t>(k)] - prev_norm[static_cast<std::size_t>(k)];
      flux += d * d;
    }
    row(6) = i == 0 ? 0.0 : std::sqrt(flux);
    std::swap(prev_norm, norm);

    row(7) = nonzero > 0 && total > 0.0 ? std::exp(log_sum / nonzero) / (total / nonzero) : 0.0;

    for (int m = 0; m < config.mel_bands; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) e += fb(m, k) * mag[static_cast<std::size_t>(k)] * mag[static_cast<std::size_t>(k)];
      log_mel[static_cast<std::size_t>(m)] = std::log(std::max(e, 1e-10));
    }
    for (int j = 1; j <= config.mfcc_count; ++j) {
      double c = 0.0;
      for (int m = 0; m < config.mel_bands; ++m)
        c += log_mel[static_cast<std::size_t>(m)] * std::cos(std::numbers::pi * j * (m + 0.5) / M);
      row(7 + j) = std::sqrt(2.0 / M) * c;
    }
  }
  return out;
}

}  // namespace polyfuse::audio
