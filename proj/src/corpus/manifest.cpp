#include "polyfuse/corpus/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/text/tokenizer.hpp"

namespace polyfuse::corpus {

using nlohmann::json;

namespace {

std::string required_string(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(ErrorCode::InvalidRecord, std::string("missing string field '") + key + "'", where);
  return it->get<std::string>();
}

double required_number(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw Error(ErrorCode::InvalidRecord, std::string("missing numeric field '") + key + "'", where);
  return it->get<double>();
}

VideoRecord video_from_json(const json& j, const std::string& where) {
  VideoRecord v;
  v.video_id = required_string(j, "video_id", where);
  v.speaker_id = required_string(j, "speaker_id", v.video_id);
  v.audio_path = required_string(j, "audio_path", v.video_id);
  v.video_path = required_string(j, "video_path", v.video_id);
  v.duration = required_number(j, "duration", v.video_id);
  if (auto it = j.find("speaker_meta"); it != j.end() && !it->is_null()) {
    SpeakerMeta m;
    m.gender = it->value("gender", "");
    m.age_band = it->value("age_band", "");
    v.speaker_meta = m;
  }
  return v;
}

Utterance utterance_from_json(const json& j, const std::string& where) {
  Utterance u;
  u.utterance_id = required_string(j, "utterance_id", where);
  u.video_id = required_string(j, "video_id", u.utterance_id);
  u.start = required_number(j, "start", u.utterance_id);
  u.end = required_number(j, "end", u.utterance_id);
  u.transcript = j.value("transcript", "");
  u.tokens = text::tokenize(u.transcript);
  return u;
}

}  // namespace

AnnotationRecord annotation_from_json(const json& j) {
  auto fail = [](const std::string& msg, const std::string& rec = {}) {
    throw Error(ErrorCode::ValidationError, msg, rec);
  };
  if (!j.is_object()) fail("annotation must be a JSON object");
  AnnotationRecord a;
  auto uid = j.find("utterance_id");
  auto aid = j.find("annotator_id");
  if (uid == j.end() || !uid->is_string() || uid->get<std::string>().empty()) fail("missing utterance_id");
  if (aid == j.end() || !aid->is_string() || aid->get<std::string>().empty()) fail("missing annotator_id");
  a.utterance_id = uid->get<std::string>();
  a.annotator_id = aid->get<std::string>();
  const std::string rec = a.utterance_id + "/" + a.annotator_id;

  auto pol = j.find("polarity");
  if (pol == j.end() || !pol->is_number_integer()) fail("polarity must be an integer in {-1, 0, 1}", rec);
  const auto p = pol->get<long long>();
  if (p < -1 || p > 1) fail("polarity out of range: " + std::to_string(p), rec);
  a.polarity = static_cast<int>(p);

  auto subj = j.find("subjectivity");
  if (subj == j.end() || !subj->is_string()) fail("subjectivity must be a string", rec);
  auto s = parse_subjectivity(subj->get<std::string>());
  if (!s) fail("unknown subjectivity '" + subj->get<std::string>() + "'", rec);
  a.subjectivity = *s;

  if (auto r = j.find("subjectivity_rule"); r != j.end() && !r->is_null()) {
    if (!r->is_string()) fail("subjectivity_rule must be a string", rec);
    auto rule = parse_subjectivity_rule(r->get<std::string>());
    if (!rule) fail("unknown subjectivity_rule '" + r->get<std::string>() + "'", rec);
    a.subjectivity_rule = *rule;
  }

  if (auto g = j.find("gestures"); g != j.end() && !g->is_null()) {
    if (!g->is_array()) fail("gestures must be an array", rec);
    for (const auto& item : *g) {
      if (!item.is_string()) fail("gesture must be a string", rec);
      auto gesture = parse_gesture(item.get<std::string>());
      if (!gesture) fail("unknown gesture '" + item.get<std::string>() + "'", rec);
      if (!a.gestures.insert(*gesture).second) fail("duplicate gesture '" + item.get<std::string>() + "'", rec);
    }
  }
  return a;
}

json to_json(const VideoRecord& v) {
  json j = {{"kind", "video"},          {"video_id", v.video_id},     {"speaker_id", v.speaker_id},
            {"audio_path", v.audio_path}, {"video_path", v.video_path}, {"duration", v.duration}};
  if (v.speaker_meta) j["speaker_meta"] = {{"gender", v.speaker_meta->gender}, {"age_band", v.speaker_meta->age_band}};
  return j;
}

json to_json(const Utterance& u) {
  return {{"kind", "utterance"}, {"utterance_id", u.utterance_id}, {"video_id", u.video_id},
          {"start", u.start},    {"end", u.end},                   {"transcript", u.transcript}};
}

json to_json(const AnnotationRecord& a) {
  json gestures = json::array();
  for (Gesture g : a.gestures) gestures.push_back(std::string(to_string(g)));
  json j = {{"kind", "annotation"},
            {"utterance_id", a.utterance_id},
            {"annotator_id", a.annotator_id},
            {"polarity", a.polarity},
            {"subjectivity", std::string(to_string(a.subjectivity))},
            {"gestures", gestures}};
  j["subjectivity_rule"] = a.subjectivity_rule ? json(std::string(to_string(*a.subjectivity_rule))) : json(nullptr);
  return j;
}

void validate(const CorpusManifest& m, const LoadOptions& options) {
  if (m.format_version != kFormatVersion)
    throw Error(ErrorCode::SchemaVersionMismatch,
                "expected format_version " + std::to_string(kFormatVersion) + ", got " +
                    std::to_string(m.format_version));

  std::set<std::string> seen;
  for (const auto& v : m.videos) {
    if (v.video_id.empty()) throw Error(ErrorCode::InvalidRecord, "empty video_id");
    if (!seen.insert(v.video_id).second) throw Error(ErrorCode::InvalidRecord, "duplicate video_id", v.video_id);
    if (v.speaker_id.empty()) throw Error(ErrorCode::InvalidRecord, "empty speaker_id", v.video_id);
    if (!(v.duration > 0.0) || !std::isfinite(v.duration))
      throw Error(ErrorCode::InvalidRecord, "duration must be positive", v.video_id);
    if (options.verify_media) {
      for (const auto* rel : {&v.audio_path, &v.video_path}) {
        if (!std::filesystem::exists(m.resolve(*rel)))
          throw Error(ErrorCode::MissingMedia, "referenced file not found: " + *rel, v.video_id);
      }
    }
  }

  seen.clear();
  std::map<std::string, std::vector<const Utterance*>> by_video;
  for (const auto& u : m.utterances) {
    if (u.utterance_id.empty()) throw Error(ErrorCode::InvalidRecord, "empty utterance_id");
    if (!seen.insert(u.utterance_id).second)
      throw Error(ErrorCode::InvalidRecord, "duplicate utterance_id", u.utterance_id);
    const VideoRecord* v = m.find_video(u.video_id);
    if (!v) throw Error(ErrorCode::DanglingReference, "utterance references unknown video '" + u.video_id + "'",
                        u.utterance_id);
    if (!(u.start >= 0.0) || !(u.start < u.end) || u.end > v->duration)
      throw Error(ErrorCode::InvalidRecord, "segment outside 0 <= start < end <= duration", u.utterance_id);
    by_video[u.video_id].push_back(&u);
  }
  for (auto& [vid, list] : by_video) {
    std::sort(list.begin(), list.end(), [](const Utterance* a, const Utterance* b) {
      return a->start < b->start || (a->start == b->start && a->utterance_id < b->utterance_id);
    });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->start < list[i - 1]->end)
        throw Error(ErrorCode::OverlappingUtterances,
                    "utterance overlaps '" + list[i - 1]->utterance_id + "' in video '" + vid + "'",
                    list[i]->utterance_id);
    }
  }

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& a : m.annotations) {
    const std::string rec = a.utterance_id + "/" + a.annotator_id;
    if (!m.find_utterance(a.utterance_id))
      throw Error(ErrorCode::DanglingReference, "annotation references unknown utterance '" + a.utterance_id + "'",
                  rec);
    if (a.annotator_id.empty()) throw Error(ErrorCode::InvalidRecord, "empty annotator_id", rec);
    if (a.polarity < -1 || a.polarity > 1) throw Error(ErrorCode::InvalidRecord, "polarity out of range", rec);
    if (!pairs.emplace(a.utterance_id, a.annotator_id).second)
      throw Error(ErrorCode::DuplicateAnnotation, "more than one record per (utterance, annotator)", rec);
  }

  for (const auto& [uid, label] : m.resolved_labels) {
    const Utterance* u = m.find_utterance(uid);
    if (!u) throw Error(ErrorCode::DanglingReference, "resolved label for unknown utterance", uid);
    if (label.is_subjective() && u->transcript.empty())
      throw Error(ErrorCode::InvalidRecord, "subjective utterance has an empty transcript", uid);
  }
}

CorpusManifest parse_manifest(const std::string& jsonl, const std::filesystem::path& base_dir,
                              const LoadOptions& options) {
  CorpusManifest m;
  m.base_dir = base_dir;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidRecord, std::string("malformed JSON: ") + e.what(), where);
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidRecord, "record must be an object", where);
    if (!header_seen) {
      auto fv = j.find("format_version");
      if (fv == j.end() || !fv->is_number_integer())
        throw Error(ErrorCode::SchemaVersionMismatch, "first line must carry format_version", where);
      m.format_version = fv->get<int>();
      if (m.format_version != kFormatVersion)
        throw Error(ErrorCode::SchemaVersionMismatch,
                    "expected format_version " + std::to_string(kFormatVersion) + ", got " +
                        std::to_string(m.format_version),
                    where);
      header_seen = true;
      continue;
    }
    const std::string kind = j.value("kind", "");
    if (kind == "video") {
      m.videos.push_back(video_from_json(j, where));
    } else if (kind == "utterance") {
      m.utterances.push_back(utterance_from_json(j, where));
    } else if (kind == "annotation") {
      try {
        m.annotations.push_back(annotation_from_json(j));
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidRecord, e.what(), where);
      }
    } else {
      throw Error(ErrorCode::InvalidRecord, "unknown record kind '" + kind + "'", where);
    }
  }
  if (!header_seen) throw Error(ErrorCode::SchemaVersionMismatch, "manifest has no header line");
  m.sort_records();
  validate(m, options);
  return m;
}

CorpusManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "manifest not found", path.string());
  return parse_manifest(read_file(path), path.parent_path(), options);
}

std::string to_jsonl(const CorpusManifest& manifest) {
  CorpusManifest m = manifest;
  m.sort_records();
  std::string out = json({{"kind", "header"}, {"format_version", m.format_version}}).dump() + "\n";
  for (const auto& v : m.videos) out += to_json(v).dump() + "\n";
  for (const auto& u : m.utterances) out += to_json(u).dump() + "\n";
  for (const auto& a : m.annotations) out += to_json(a).dump() + "\n";
  return out;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  write_file_atomic(path, to_jsonl(manifest));
}

}  // namespace polyfuse::corpus
