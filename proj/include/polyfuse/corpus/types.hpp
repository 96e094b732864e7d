#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace polyfuse::corpus {

inline constexpr int kFormatVersion = 1;

enum class Subjectivity { subjective, objective };
enum class SubjectivityRule { explicit_criticism, third_person_opinion, implicit_opinion };
enum class Gesture { smile, frown, head_nod, head_shake };

using GestureSet = std::set<Gesture>;

std::string_view to_string(Subjectivity s) noexcept;
std::string_view to_string(SubjectivityRule r) noexcept;
std::string_view to_string(Gesture g) noexcept;
std::optional<Subjectivity> parse_subjectivity(std::string_view s) noexcept;
std::optional<SubjectivityRule> parse_subjectivity_rule(std::string_view s) noexcept;
std::optional<Gesture> parse_gesture(std::string_view s) noexcept;

struct SpeakerMeta {
  std::string gender;
  std::string age_band;
  bool operator==(const SpeakerMeta&) const = default;
};

struct VideoRecord {
  std::string video_id;
  std::string speaker_id;
  std::string audio_path;  // relative to the manifest directory
  std::string video_path;
  double duration = 0.0;   // seconds
  std::optional<SpeakerMeta> speaker_meta;
  bool operator==(const VideoRecord&) const = default;
};

struct Utterance {
  std::string utterance_id;
  std::string video_id;
  double start = 0.0;
  double end = 0.0;
  std::string transcript;
  std::vector<std::string> tokens;  // derived from transcript at load
  bool operator==(const Utterance&) const = default;
};

struct AnnotationRecord {
  std::string utterance_id;
  std::string annotator_id;
  int polarity = 0;  // -1, 0, +1; only meaningful for subjective records
  Subjectivity subjectivity = Subjectivity::subjective;
  std::optional<SubjectivityRule> subjectivity_rule;
  GestureSet gestures;
  bool operator==(const AnnotationRecord&) const = default;

  /// Polarity with objective records collapsed to 0.
  int effective_polarity() const { return subjectivity == Subjectivity::subjective ? polarity : 0; }
};

/// Outcome of majority resolution; an empty optional means "no strict majority".
struct ResolvedLabel {
  std::optional<Subjectivity> subjectivity;
  std::optional<int> polarity;
  bool operator==(const ResolvedLabel&) const = default;

  bool is_subjective() const { return subjectivity == Subjectivity::subjective; }
  /// Usable as a binary training example (positive or negative).
  bool trainable() const { return is_subjective() && polarity && *polarity != 0; }
};

struct CorpusManifest {
  int format_version = kFormatVersion;
  std::vector<VideoRecord> videos;          // sorted by video_id
  std::vector<Utterance> utterances;        // sorted by utterance_id
  std::vector<AnnotationRecord> annotations;  // sorted by (utterance_id, annotator_id)
  std::map<std::string, ResolvedLabel> resolved_labels;
  std::filesystem::path base_dir;  // media paths are relative to this

  bool operator==(const CorpusManifest&) const = default;

  const VideoRecord* find_video(std::string_view id) const;
  const Utterance* find_utterance(std::string_view id) const;
  /// Speaker of an utterance; throws DanglingReference for unknown ids.
  const std::string& speaker_of(std::string_view utterance_id) const;
  std::filesystem::path resolve(const std::string& relative) const;

  /// Restores the canonical record ordering.
  void sort_records();
};

}  // namespace polyfuse::corpus
