#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::pipeline {

/// separable: every modality carries the label (optionally flipped per
/// modality with probability `modality_noise`).
/// xor_correlated: label = audio bit XOR visual bit; the text bit is random.
/// ramp_temporal: label = direction of a brightness ramp; audio and text bits
/// are random.
enum class Scenario { separable, xor_correlated, ramp_temporal };

std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view s);

struct SynthOptions {
  Scenario scenario = Scenario::separable;
  int utterances = 200;
  int speakers = 10;
  std::uint64_t seed = 1;
  double modality_noise = 0.0;
  double utterance_seconds = 1.5;
  double gap_seconds = 0.25;
  int annotators = 3;
  int frame_width = 80;
  int frame_height = 64;
  double fps = 16.0;
  int sample_rate = 16000;
  int embedding_dim = 300;
};

/// Cue carried by each modality of one utterance (bit order A, V, T).
using CueBits = std::array<int, 3>;

struct SynthCorpus {
  std::filesystem::path manifest_path;
  std::filesystem::path embeddings_path;
  corpus::CorpusManifest manifest;
  std::map<std::string, int> labels;    // utterance → 1 positive, 0 negative
  std::map<std::string, CueBits> cues;  // utterance → per-modality bit
};

/// Writes manifest.jsonl, embeddings.vec and media/ (16-bit WAV and lossless
/// AVI per speaker video) under `dir`. Audio codes its bit as the fundamental
/// of a harmonic tone, video as frame brightness (or ramp direction), text as
/// a sentiment keyword among filler words. Every annotator labels every
/// utterance with the true polarity.
SynthCorpus generate_corpus(const std::filesystem::path& dir, const SynthOptions& options);

}  // namespace polyfuse::pipeline
