#include "polyfuse/corpus/types.hpp"

#include <algorithm>
#include <tuple>

#include "polyfuse/core/error.hpp"

namespace polyfuse::corpus {

std::string_view to_string(Subjectivity s) noexcept {
  return s == Subjectivity::subjective ? "subjective" : "objective";
}

std::string_view to_string(SubjectivityRule r) noexcept {
  switch (r) {
    case SubjectivityRule::explicit_criticism: return "explicit_criticism";
    case SubjectivityRule::third_person_opinion: return "third_person_opinion";
    case SubjectivityRule::implicit_opinion: return "implicit_opinion";
  }
  return "";
}

std::string_view to_string(Gesture g) noexcept {
  switch (g) {
    case Gesture::smile: return "smile";
    case Gesture::frown: return "frown";
    case Gesture::head_nod: return "head_nod";
    case Gesture::head_shake: return "head_shake";
  }
  return "";
}

std::optional<Subjectivity> parse_subjectivity(std::string_view s) noexcept {
  if (s == "subjective") return Subjectivity::subjective;
  if (s == "objective") return Subjectivity::objective;
  return std::nullopt;
}

std::optional<SubjectivityRule> parse_subjectivity_rule(std::string_view s) noexcept {
  if (s == "explicit_criticism") return SubjectivityRule::explicit_criticism;
  if (s == "third_person_opinion") return SubjectivityRule::third_person_opinion;
  if (s == "implicit_opinion") return SubjectivityRule::implicit_opinion;
  return std::nullopt;
}

std::optional<Gesture> parse_gesture(std::string_view s) noexcept {
  if (s == "smile") return Gesture::smile;
  if (s == "frown") return Gesture::frown;
  if (s == "head_nod") return Gesture::head_nod;
  if (s == "head_shake") return Gesture::head_shake;
  return std::nullopt;
}

const VideoRecord* CorpusManifest::find_video(std::string_view id) const {
  auto it = std::lower_bound(videos.begin(), videos.end(), id,
                             [](const VideoRecord& v, std::string_view k) { return v.video_id < k; });
  return it != videos.end() && it->video_id == id ? &*it : nullptr;
}

const Utterance* CorpusManifest::find_utterance(std::string_view id) const {
  auto it = std::lower_bound(utterances.begin(), utterances.end(), id,
                             [](const Utterance& u, std::string_view k) { return u.utterance_id < k; });
  return it != utterances.end() && it->utterance_id == id ? &*it : nullptr;
}

const std::string& CorpusManifest::speaker_of(std::string_view utterance_id) const {
  const Utterance* u = find_utterance(utterance_id);
  if (!u) throw Error(ErrorCode::DanglingReference, "unknown utterance", std::string(utterance_id));
  const VideoRecord* v = find_video(u->video_id);
  if (!v) throw Error(ErrorCode::DanglingReference, "utterance references unknown video", u->utterance_id);
  return v->speaker_id;
}

std::filesystem::path CorpusManifest::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

void CorpusManifest::sort_records() {
  std::sort(videos.begin(), videos.end(),
            [](const VideoRecord& a, const VideoRecord& b) { return a.video_id < b.video_id; });
  std::sort(utterances.begin(), utterances.end(),
            [](const Utterance& a, const Utterance& b) { return a.utterance_id < b.utterance_id; });
  std::sort(annotations.begin(), annotations.end(), [](const AnnotationRecord& a, const AnnotationRecord& b) {
    return std::tie(a.utterance_id, a.annotator_id) < std::tie(b.utterance_id, b.annotator_id);
  });
}

}  // namespace polyfuse::corpus
