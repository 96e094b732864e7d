#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace polyfuse::audio {

struct AudioSignal {
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = 16000;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

bool supported_sample_rate(int rate) noexcept;

/// Reads a RIFF/WAVE file with 16-bit PCM or 32-bit float samples; channels
/// are averaged to mono. Throws MissingMedia when absent, DecodeFailure when
/// malformed or at an unsupported rate.
AudioSignal read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM, clipping to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioSignal& signal);
/// The bytes write_wav would store (16-bit PCM).
std::string encode_wav(const AudioSignal& signal);

/// Samples in [start, end) seconds. Throws WindowOutOfRange when the window
/// leaves the signal by more than one sample.
AudioSignal slice(const AudioSignal& signal, double start, double end);

}  // namespace polyfuse::audio
