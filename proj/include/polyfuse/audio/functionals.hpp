#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/audio/descriptors.hpp"

namespace polyfuse::audio {

/// mean, quadratic_mean, std, flatness, skewness, kurtosis, q1, q2, q3.
const std::vector<std::string>& functional_names();

/// Statistics of one descriptor track, in functional_names() order. Standard
/// deviation is the population one; kurtosis is m4/σ⁴ (not excess);
/// flatness is geometric over arithmetic mean of |x|; quartiles interpolate
/// linearly between order statistics. Zero-variance tracks get skewness and
/// kurtosis 0.
std::vector<double> track_functionals(std::vector<double> track);

struct FunctionalVector {
  std::vector<double> values;
  std::vector<std::string> layout;  // "descriptor.functional", descriptor-major

  std::size_t size() const { return values.size(); }
};

struct FunctionalOptions {
  bool voiced_gate = true;
  double voicing_threshold = 0.45;
  bool mean_only = false;
};

/// Collapses each descriptor column; with voiced_gate only frames whose
/// voicing exceeds the threshold contribute. Throws EmptyAfterGating when no
/// frame survives.
FunctionalVector apply_functionals(const LldMatrix& llds, const FunctionalOptions& options = {});

/// Per-speaker, per-dimension mean and standard deviation.
struct SpeakerStatistics {
  struct Moments {
    std::vector<double> mean;
    std::vector<double> std;
  };
  std::map<std::string, Moments> speakers;

  nlohmann::json to_json() const;  // {speaker_id: {mean: [...], std: [...]}}
  static SpeakerStatistics from_json(const nlohmann::json& j);
};

using VectorMap = std::map<std::string, std::vector<double>>;    // utterance → vector
using SpeakerMap = std::map<std::string, std::string>;           // utterance → speaker

SpeakerStatistics fit_speaker_statistics(const VectorMap& vectors, const SpeakerMap& speakers);

/// Subtracts the speaker mean and divides by the speaker std; dimensions with
/// zero variance map to 0. Throws ValidationError for a speaker without
/// statistics or a dimension mismatch.
VectorMap apply_speaker_statistics(const SpeakerStatistics& stats, const VectorMap& vectors, const SpeakerMap& speakers);

/// fit + apply over the same utterances.
VectorMap speaker_zstandardize(const VectorMap& vectors, const SpeakerMap& speakers);

}  // namespace polyfuse::audio
