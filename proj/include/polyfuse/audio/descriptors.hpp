#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "polyfuse/audio/wav.hpp"

namespace polyfuse::audio {

using MatrixXdR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FramingConfig {
  double frame_length = 0.050;  // seconds
  double hop = 0.025;           // seconds; 40 frames per second
};

/// Overlapping raw frames (one per row). Time-domain descriptors read the raw
/// samples; spectral descriptors apply `window` first.
struct FrameMatrix {
  MatrixXdR frames;
  std::vector<double> window;  // Hann, frame_samples long
  int sample_rate = 16000;
  double hop = 0.025;

  Eigen::Index count() const { return frames.rows(); }
  Eigen::Index frame_samples() const { return frames.cols(); }
  /// frames with the window applied.
  MatrixXdR windowed() const;
};

/// Symmetric Hann window of n samples.
std::vector<double> hann_window(int n);

/// Frame count is floor((len − frame_len) / hop) + 1 with frame i starting at
/// sample round(i · hop · rate). Throws TooShort when shorter than one frame.
FrameMatrix frame_signal(const AudioSignal& signal, const FramingConfig& config = {});

struct LldConfig {
  double pitch_min = 50.0;   // Hz
  double pitch_max = 500.0;  // Hz
  double voicing_threshold = 0.45;
  int mel_bands = 26;
  int mfcc_count = 12;
};

/// Per-frame descriptors, one row per frame, columns as `names`.
struct LldMatrix {
  MatrixXdR values;
  std::vector<std::string> names;
  double frame_hop = 0.025;

  Eigen::Index column(const std::string& name) const;
};

/// rms, intensity, loudness, pitch, voicing, centroid, flux, flatness,
/// mfcc1 … mfccN.
std::vector<std::string> descriptor_names(const LldConfig& config = {});

/// Smallest power of two ≥ n.
int fft_size(int n);

/// HTK-style triangular mel filters over fft_size/2 + 1 bins, one row per band.
MatrixXdR mel_filterbank(int bands, int fft_size, int sample_rate);

/// Magnitude spectrum (fft_size/2 + 1 bins) of one windowed, zero-padded frame.
std::vector<double> magnitude_spectrum(const double* windowed, int length, int fft_size);

/// Normalized autocorrelation pitch estimate on one raw frame.
struct PitchEstimate {
  double frequency = 0.0;  // 0 when unvoiced
  double voicing = 0.0;    // peak normalized autocorrelation in [0, 1]
};
PitchEstimate estimate_pitch(const double* frame, int length, int sample_rate, const LldConfig& config = {});

/// Never throws on content: silent frames yield pitch 0, voicing 0, centroid 0.
LldMatrix extract_llds(const FrameMatrix& frames, const LldConfig& config = {});

}  // namespace polyfuse::audio
