#include "polyfuse/annotation/store.hpp"

#include <algorithm>
#include <mutex>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/corpus/agreement.hpp"
#include "polyfuse/corpus/manifest.hpp"

namespace polyfuse::annotation {

namespace fs = std::filesystem;

nlohmann::json AnnotationTask::to_json() const {
  return {{"utterance_id", utterance_id}, {"audio_url", audio_url},   {"video_url", video_url},
          {"start", start},               {"end", end},               {"transcript", transcript},
          {"annotator_id", annotator_id}, {"status", status == TaskStatus::done ? "done" : "pending"}};
}

AnnotationStore::AnnotationStore(corpus::CorpusManifest base, std::vector<std::string> annotators, fs::path log_path)
    : base_(std::move(base)), annotators_(std::move(annotators)), log_path_(std::move(log_path)) {
  std::sort(annotators_.begin(), annotators_.end());
  annotators_.erase(std::unique(annotators_.begin(), annotators_.end()), annotators_.end());
  if (annotators_.empty()) throw Error(ErrorCode::ConfigError, "at least one annotator must be registered");
  if (fs::exists(log_path_)) {
    std::ifstream in(log_path_, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        if (in.peek() == std::char_traits<char>::eof()) break;
        throw Error(ErrorCode::ValidationError, "annotation log is corrupt", log_path_.string());
      }
      const corpus::AnnotationRecord r = corpus::annotation_from_json(j);
      state_[{r.utterance_id, r.annotator_id}] = r;
    }
  } else if (log_path_.has_parent_path()) {
    fs::create_directories(log_path_.parent_path());
  }
  log_.open(log_path_, std::ios::binary | std::ios::app);
  if (!log_) throw Error(ErrorCode::IoError, "cannot open annotation log", log_path_.string());
}

bool AnnotationStore::is_annotator(const std::string& id) const {
  return std::binary_search(annotators_.begin(), annotators_.end(), id);
}

std::optional<AnnotationTask> AnnotationStore::next_task(const std::string& annotator_id) const {
  if (!is_annotator(annotator_id))
    throw Error(ErrorCode::UnknownAnnotator, "annotator '" + annotator_id + "' is not registered");
  std::shared_lock lock(mutex_);
  for (const corpus::Utterance& u : base_.utterances) {  // sorted by id
    if (state_.contains({u.utterance_id, annotator_id})) continue;
    const bool in_base = std::any_of(base_.annotations.begin(), base_.annotations.end(), [&](const auto& a) {
      return a.utterance_id == u.utterance_id && a.annotator_id == annotator_id;
    });
    if (in_base) continue;
    return AnnotationTask{u.utterance_id, "/api/media/" + u.utterance_id + ".wav",
                          "/api/media/" + u.utterance_id + ".mp4", u.start, u.end, u.transcript, annotator_id,
                          TaskStatus::pending};
  }
  return std::nullopt;
}

void AnnotationStore::submit(const corpus::AnnotationRecord& record) {
  if (base_.find_utterance(record.utterance_id) == nullptr)
    throw Error(ErrorCode::UnknownUtterance, "unknown utterance '" + record.utterance_id + "'");
  if (!is_annotator(record.annotator_id))
    throw Error(ErrorCode::UnknownAnnotator, "annotator '" + record.annotator_id + "' is not registered");
  const std::string line = corpus::to_json(record).dump() + "\n";
  std::unique_lock lock(mutex_);
  log_ << line;
  log_.flush();
  if (!log_) throw Error(ErrorCode::IoError, "cannot append to annotation log", log_path_.string());
  state_[{record.utterance_id, record.annotator_id}] = record;
}

std::vector<corpus::AnnotationRecord> AnnotationStore::merged_locked() const {
  std::map<Key, corpus::AnnotationRecord> merged;
  for (const auto& a : base_.annotations) merged[{a.utterance_id, a.annotator_id}] = a;
  for (const auto& [k, r] : state_) merged[k] = r;
  std::vector<corpus::AnnotationRecord> out;
  for (auto& [k, r] : merged) out.push_back(std::move(r));
  return out;
}

std::vector<corpus::AnnotationRecord> AnnotationStore::records() const {
  std::shared_lock lock(mutex_);
  return merged_locked();
}

nlohmann::json AnnotationStore::agreement_snapshot() const {
  const auto all = records();
  nlohmann::json out = nlohmann::json::object();
  const std::pair<const char*, corpus::AgreementFacet> facets[] = {{"polarity", corpus::AgreementFacet::polarity},
                                                                    {"subjectivity", corpus::AgreementFacet::subjectivity},
                                                                    {"gestures", corpus::AgreementFacet::gestures}};
  for (const auto& [key, facet] : facets) {
    try {
      const double v = corpus::compute_agreement(all, facet);
      out[key] = {{"status", "ok"}, {"value", v}, {"display", corpus::format_percentage(v)}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientOverlap) throw;
      out[key] = {{"status", "not_yet_computable"}, {"reason", "no utterance has two annotations yet"}};
    }
  }
  out["records"] = all.size();
  return out;
}

std::string AnnotationStore::export_manifest() const {
  corpus::CorpusManifest m = base_;
  m.annotations = records();
  m.resolved_labels.clear();
  m.sort_records();
  return corpus::to_jsonl(m);
}

}  // namespace polyfuse::annotation
