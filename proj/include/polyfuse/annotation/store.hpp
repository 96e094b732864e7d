#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::annotation {

enum class TaskStatus { pending, done };

struct AnnotationTask {
  std::string utterance_id;
  std::string audio_url;  // trimmed clip
  std::string video_url;
  double start = 0.0;
  double end = 0.0;
  std::string transcript;
  std::string annotator_id;
  TaskStatus status = TaskStatus::pending;

  nlohmann::json to_json() const;
};

/// Annotation state over a base manifest. Every registered annotator labels
/// every utterance. Submissions are appended to a JSON-lines log and the
/// current state keeps the latest record per (annotator, utterance).
class AnnotationStore {
 public:
  /// Replays an existing log; a torn final line (interrupted write) is ignored.
  AnnotationStore(corpus::CorpusManifest base, std::vector<std::string> annotators, std::filesystem::path log_path);

  /// Lowest-id utterance the annotator has not labelled yet. Throws UnknownAnnotator.
  std::optional<AnnotationTask> next_task(const std::string& annotator_id) const;

  /// Throws UnknownUtterance or UnknownAnnotator; the record must already be
  /// enum-valid (see corpus::annotation_from_json).
  void submit(const corpus::AnnotationRecord& record);

  /// {"polarity": {"status": "ok", "value": 89.23, "display": "89.23%"}, ...};
  /// facets without overlapping records report status "not_yet_computable".
  nlohmann::json agreement_snapshot() const;

  /// Base manifest with its annotations merged with the stored records (stored
  /// records win), canonically serialized.
  std::string export_manifest() const;

  std::vector<corpus::AnnotationRecord> records() const;
  bool is_annotator(const std::string& id) const;
  const corpus::CorpusManifest& base() const { return base_; }

 private:
  using Key = std::pair<std::string, std::string>;  // utterance, annotator

  std::vector<corpus::AnnotationRecord> merged_locked() const;

  corpus::CorpusManifest base_;
  std::vector<std::string> annotators_;
  std::filesystem::path log_path_;
  mutable std::shared_mutex mutex_;
  std::map<Key, corpus::AnnotationRecord> state_;
  std::ofstream log_;
};

}  // namespace polyfuse::annotation
