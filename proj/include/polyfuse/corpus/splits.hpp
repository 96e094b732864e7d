#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::corpus {

enum class Split { train = 0, validation = 1, test = 2 };
std::string_view to_string(Split s) noexcept;

struct SplitRatios {
  double train = 0.6;
  double validation = 0.1;
  double test = 0.3;
  std::array<double, 3> as_array() const { return {train, validation, test}; }
  bool operator==(const SplitRatios&) const = default;
};

struct SplitAssignment {
  std::map<std::string, Split> split;  // utterance_id -> split
  std::uint64_t seed = 0;
  SplitRatios ratios;

  bool operator==(const SplitAssignment&) const = default;

  std::vector<std::string> members(Split s) const;
  /// Realized utterance fractions per split (train, validation, test).
  std::array<double, 3> realized() const;
  /// Hash of the assignment and seed, recorded in artifacts and reports.
  std::string fingerprint() const;
};

/// Randomly partitions speakers (never utterances) so realized utterance
/// fractions track the ratios. Speakers are sorted by id before the seeded
/// shuffle, so the result does not depend on record order.
SplitAssignment make_splits(const CorpusManifest& manifest, const SplitRatios& ratios, std::uint64_t seed);

/// Throws SpeakerLeakage if any speaker contributes to more than one split.
void check_speaker_exclusive(const CorpusManifest& manifest, const SplitAssignment& split);

nlohmann::json to_json(const SplitAssignment& split);
SplitAssignment split_from_json(const nlohmann::json& j);

}  // namespace polyfuse::corpus
