#include "polyfuse/corpus/labels.hpp"

#include <map>
#include <set>

#include "polyfuse/core/error.hpp"

namespace polyfuse::corpus {
namespace {

template <class T>
std::optional<T> strict_majority(const std::map<T, int>& votes, int total) {
  for (const auto& [value, count] : votes) {
    if (2 * count > total) return value;
  }
  return std::nullopt;
}

CorpusManifest keep_utterances(const CorpusManifest& manifest, const std::set<std::string>& keep) {
  CorpusManifest out;
  out.format_version = manifest.format_version;
  out.base_dir = manifest.base_dir;
  out.videos = manifest.videos;
  for (const auto& u : manifest.utterances)
    if (keep.count(u.utterance_id)) out.utterances.push_back(u);
  for (const auto& a : manifest.annotations)
    if (keep.count(a.utterance_id)) out.annotations.push_back(a);
  for (const auto& [uid, label] : manifest.resolved_labels)
    if (keep.count(uid)) out.resolved_labels.emplace(uid, label);
  return out;
}

}  // namespace

CorpusManifest resolve_labels(const CorpusManifest& manifest, ResolutionPolicy policy,
                              const std::optional<std::vector<std::string>>& required) {
  (void)policy;  // majority_discard_ties is the only policy
  std::map<std::string, std::vector<const AnnotationRecord*>> by_utt;
  for (const auto& a : manifest.annotations) by_utt[a.utterance_id].push_back(&a);

  if (required) {
    for (const auto& uid : *required) {
      if (!by_utt.count(uid)) throw Error(ErrorCode::NoAnnotations, "labeled utterance has no annotations", uid);
    }
  }

  CorpusManifest out = manifest;
  out.resolved_labels.clear();
  for (const auto& [uid, records] : by_utt) {
    ResolvedLabel label;
    std::map<Subjectivity, int> subj_votes;
    for (const auto* r : records) ++subj_votes[r->subjectivity];
    label.subjectivity = strict_majority(subj_votes, static_cast<int>(records.size()));
    if (label.is_subjective()) {
      std::map<int, int> pol_votes;
      int n = 0;
      for (const auto* r : records) {
        if (r->subjectivity != Subjectivity::subjective) continue;
        ++pol_votes[r->polarity];
        ++n;
      }
      label.polarity = strict_majority(pol_votes, n);
    }
    out.resolved_labels.emplace(uid, label);
  }
  for (const auto& [uid, label] : out.resolved_labels) {
    if (label.is_subjective() && manifest.find_utterance(uid)->transcript.empty())
      throw Error(ErrorCode::InvalidRecord, "subjective utterance has an empty transcript", uid);
  }
  return out;
}

CorpusManifest filter_subjective(const CorpusManifest& manifest) {
  std::set<std::string> keep;
  for (const auto& [uid, label] : manifest.resolved_labels)
    if (label.is_subjective()) keep.insert(uid);
  return keep_utterances(manifest, keep);
}

CorpusManifest filter_trainable(const CorpusManifest& manifest) {
  std::set<std::string> keep;
  for (const auto& [uid, label] : manifest.resolved_labels)
    if (label.trainable()) keep.insert(uid);
  return keep_utterances(manifest, keep);
}

}  // namespace polyfuse::corpus
