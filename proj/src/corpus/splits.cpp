#include "polyfuse/corpus/splits.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/hash.hpp"
#include "polyfuse/core/rng.hpp"

namespace polyfuse::corpus {

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "";
}

std::vector<std::string> SplitAssignment::members(Split s) const {
  std::vector<std::string> out;
  for (const auto& [uid, sp] : split)
    if (sp == s) out.push_back(uid);
  return out;
}

std::array<double, 3> SplitAssignment::realized() const {
  std::array<double, 3> counts{};
  for (const auto& [uid, sp] : split) counts[static_cast<int>(sp)] += 1.0;
  const double n = static_cast<double>(split.size());
  if (n > 0)
    for (auto& c : counts) c /= n;
  return counts;
}

std::string SplitAssignment::fingerprint() const {
  Sha256 h;
  h.update("seed=" + std::to_string(seed) + "\n");
  for (const auto& [uid, sp] : split) {
    h.update(uid);
    h.update("\t");
    h.update(to_string(sp));
    h.update("\n");
  }
  return h.hex().substr(0, 16);
}

SplitAssignment make_splits(const CorpusManifest& manifest, const SplitRatios& ratios, std::uint64_t seed) {
  const auto target_ratio = ratios.as_array();
  double sum = 0.0;
  for (double r : target_ratio) {
    if (!(r >= 0.0)) throw Error(ErrorCode::ConfigError, "split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::ConfigError, "split ratios must sum to 1");

  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& u : manifest.utterances) by_speaker[manifest.speaker_of(u.utterance_id)].push_back(u.utterance_id);
  if (by_speaker.size() < 3)
    throw Error(ErrorCode::TooFewSpeakers,
                "need at least 3 speakers for a speaker-independent split, found " + std::to_string(by_speaker.size()));

  // std::map iteration gives the id-sorted order the shuffle starts from.
  std::vector<std::string> speakers;
  for (const auto& [spk, utts] : by_speaker) speakers.push_back(spk);
  Rng rng(seed);
  rng.shuffle(speakers.begin(), speakers.end());

  const double total = static_cast<double>(manifest.utterances.size());
  std::array<double, 3> deficit{};
  for (int s = 0; s < 3; ++s) deficit[s] = target_ratio[s] * total;
  std::array<std::vector<std::string>, 3> assigned;

  // Greedy: each speaker goes to the split furthest below its target. No split
  // ends further than one speaker's utterance mass from its target.
  for (const auto& spk : speakers) {
    int best = 0;
    for (int s = 1; s < 3; ++s)
      if (deficit[s] > deficit[best] + 1e-12) best = s;
    assigned[best].push_back(spk);
    deficit[best] -= static_cast<double>(by_speaker[spk].size());
  }

  // A split with a positive ratio must not be empty: move the smallest speaker
  // over from the split that overshot its target the most.
  for (int s = 0; s < 3; ++s) {
    if (target_ratio[s] <= 0.0 || !assigned[s].empty()) continue;
    int donor = -1;
    for (int d = 0; d < 3; ++d) {
      if (d == s || assigned[d].size() < 2) continue;
      if (donor < 0 || deficit[d] < deficit[donor]) donor = d;
    }
    if (donor < 0) continue;
    auto smallest = std::min_element(assigned[donor].begin(), assigned[donor].end(),
                                     [&](const std::string& a, const std::string& b) {
                                       const auto na = by_speaker[a].size(), nb = by_speaker[b].size();
                                       return na < nb || (na == nb && a < b);
                                     });
    const double mass = static_cast<double>(by_speaker[*smallest].size());
    deficit[donor] += mass;
    deficit[s] -= mass;
    assigned[s].push_back(*smallest);
    assigned[donor].erase(smallest);
  }

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  for (int s = 0; s < 3; ++s)
    for (const auto& spk : assigned[s])
      for (const auto& uid : by_speaker[spk]) out.split[uid] = static_cast<Split>(s);
  return out;
}

void check_speaker_exclusive(const CorpusManifest& manifest, const SplitAssignment& split) {
  std::map<std::string, Split> speaker_split;
  for (const auto& [uid, sp] : split.split) {
    const std::string& spk = manifest.speaker_of(uid);
    auto [it, inserted] = speaker_split.emplace(spk, sp);
    if (!inserted && it->second != sp)
      throw Error(ErrorCode::SpeakerLeakage,
                  "speaker '" + spk + "' appears in both " + std::string(to_string(it->second)) + " and " +
                      std::string(to_string(sp)),
                  uid);
  }
}

nlohmann::json to_json(const SplitAssignment& s) {
  nlohmann::json assignment = nlohmann::json::object();
  for (const auto& [uid, sp] : s.split) assignment[uid] = std::string(to_string(sp));
  const auto realized = s.realized();
  return {{"seed", s.seed},
          {"ratios", {s.ratios.train, s.ratios.validation, s.ratios.test}},
          {"realized", {realized[0], realized[1], realized[2]}},
          {"fingerprint", s.fingerprint()},
          {"split", assignment}};
}

SplitAssignment split_from_json(const nlohmann::json& j) {
  SplitAssignment s;
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto& r = j.at("ratios");
  s.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
  for (const auto& [uid, name] : j.at("split").items()) {
    const auto str = name.get<std::string>();
    if (str == "train") s.split[uid] = Split::train;
    else if (str == "validation") s.split[uid] = Split::validation;
    else if (str == "test") s.split[uid] = Split::test;
    else throw Error(ErrorCode::InvalidRecord, "unknown split name '" + str + "'", uid);
  }
  return s;
}

}  // namespace polyfuse::corpus
