#include "polyfuse/audio/pipeline.hpp"

#include "polyfuse/core/hash.hpp"

namespace polyfuse::audio {

namespace {
constexpr int kAudioPipelineRevision = 1;
}

std::size_t AudioPipelineConfig::dimension() const {
  return descriptor_names(lld).size() * (mean_only ? 1 : functional_names().size());
}

nlohmann::json AudioPipelineConfig::to_json() const {
  return {{"frame_length", framing.frame_length},
          {"frame_hop", framing.hop},
          {"pitch_min", lld.pitch_min},
          {"pitch_max", lld.pitch_max},
          {"voicing_threshold", lld.voicing_threshold},
          {"mel_bands", lld.mel_bands},
          {"mfcc_count", lld.mfcc_count},
          {"voiced_gate", voiced_gate},
          {"mean_only", mean_only}};
}

AudioPipelineConfig AudioPipelineConfig::from_json(const nlohmann::json& j) {
  AudioPipelineConfig c;
  c.framing.frame_length = j.value("frame_length", c.framing.frame_length);
  c.framing.hop = j.value("frame_hop", c.framing.hop);
  c.lld.pitch_min = j.value("pitch_min", c.lld.pitch_min);
  c.lld.pitch_max = j.value("pitch_max", c.lld.pitch_max);
  c.lld.voicing_threshold = j.value("voicing_threshold", c.lld.voicing_threshold);
  c.lld.mel_bands = j.value("mel_bands", c.lld.mel_bands);
  c.lld.mfcc_count = j.value("mfcc_count", c.lld.mfcc_count);
  c.voiced_gate = j.value("voiced_gate", c.voiced_gate);
  c.mean_only = j.value("mean_only", c.mean_only);
  return c;
}

std::string AudioPipelineConfig::version() const {
  return "audio-" + std::to_string(kAudioPipelineRevision) + "-" + sha256_hex(to_json().dump()).substr(0, 12);
}

FunctionalVector utterance_functionals(const AudioSignal& clip, const AudioPipelineConfig& config) {
  return apply_functionals(extract_llds(frame_signal(clip, config.framing), config.lld), config.functional_options());
}

nn::MlpClassifierConfig audio_model_config() { return {{1024, 512, 128}, 0.0, true}; }

}  // namespace polyfuse::audio
