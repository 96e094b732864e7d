#include "polyfuse/pipeline/feature_cache.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <thread>

#include "polyfuse/audio/wav.hpp"
#include "polyfuse/core/hash.hpp"
#include "polyfuse/visual/video.hpp"

namespace polyfuse::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr int kTextRevision = 1;
constexpr int kVisualRevision = 1;

std::string short_hash(const std::string& text) { return sha256_hex(text).substr(0, 12); }

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

}  // namespace

nlohmann::json PipelineSettings::to_json() const {
  return {{"audio", audio.to_json()},
          {"visual", {{"frames", visual.frames}, {"height", visual.height}, {"width", visual.width}}},
          {"text", {{"embeddings", embeddings.generic_string()}, {"window", text_window}, {"dim", embedding_dim}}}};
}

PipelineSettings PipelineSettings::from_json(const nlohmann::json& j) {
  PipelineSettings s;
  if (j.contains("audio")) s.audio = audio::AudioPipelineConfig::from_json(j.at("audio"));
  if (j.contains("visual")) {
    const auto& v = j.at("visual");
    s.visual = {v.value("frames", s.visual.frames), v.value("height", s.visual.height), v.value("width", s.visual.width)};
  }
  if (j.contains("text")) {
    const auto& t = j.at("text");
    s.embeddings = t.value("embeddings", std::string());
    s.text_window = t.value("window", s.text_window);
    s.embedding_dim = t.value("dim", s.embedding_dim);
  }
  return s;
}

std::string pipeline_version(Modality modality, const PipelineSettings& settings) {
  switch (modality) {
    case Modality::audio:
      return settings.audio.version();
    case Modality::text: {
      const std::string content = fs::exists(settings.embeddings) ? sha256_file(settings.embeddings) : "absent";
      return "text-" + std::to_string(kTextRevision) + "-" +
             short_hash(std::to_string(settings.text_window) + "/" + std::to_string(settings.embedding_dim) + "/" +
                        content);
    }
    case Modality::visual:
      return "visual-" + std::to_string(kVisualRevision) + "-" +
             short_hash(std::to_string(settings.visual.frames) + "x" + std::to_string(settings.visual.height) + "x" +
                        std::to_string(settings.visual.width) + "/" + visual::decoder_identity());
  }
  return {};
}

nlohmann::json CacheBuildReport::to_json() const {
  nlohmann::json f = nlohmann::json::array();
  for (const auto& x : failures)
    f.push_back({{"utterance_id", x.utterance_id}, {"error", std::string(to_string(x.code))}, {"message", x.message}});
  return {{"modality", std::string(name(modality))},
          {"pipeline_version", pipeline_version},
          {"built", built},
          {"skipped", skipped},
          {"failures", f}};
}

FeatureCache::FeatureCache(fs::path dir, PipelineSettings settings) : dir_(std::move(dir)), settings_(std::move(settings)) {
  for (Modality m : kAllModalities) versions_[static_cast<int>(m)] = pipeline_version(m, settings_);
}

const std::string& FeatureCache::version(Modality modality) const { return versions_[static_cast<int>(modality)]; }

fs::path FeatureCache::tensor_path(Modality modality, const std::string& utterance_id) const {
  return dir_ / std::string(name(modality)) / (utterance_id + ".npy");
}

namespace {

fs::path sidecar_of(const fs::path& npy) { return fs::path(npy).replace_extension(".json"); }

struct WorkItem {
  const corpus::Utterance* utterance;
  std::string speaker;
  fs::path media;
  std::string content_hash;
};

}  // namespace

CacheBuildReport FeatureCache::build(const corpus::CorpusManifest& manifest, Modality modality, int workers,
                                     const std::vector<std::string>* only) const {
  CacheBuildReport report;
  report.modality = modality;
  report.pipeline_version = version(modality);
  fs::create_directories(dir_ / std::string(name(modality)));

  // Media digests are computed once per file.
  std::map<std::string, std::string> media_digest;
  std::vector<WorkItem> items;
  for (const auto& u : manifest.utterances) {
    if (only != nullptr && std::find(only->begin(), only->end(), u.utterance_id) == only->end()) continue;
    const corpus::VideoRecord* video = manifest.find_video(u.video_id);
    if (video == nullptr) throw Error(ErrorCode::DanglingReference, "unknown video " + u.video_id, u.utterance_id);
    WorkItem item{&u, video->speaker_id, {}, {}};
    std::string source;
    if (modality == Modality::text) {
      source = u.transcript;
    } else {
      item.media = manifest.resolve(modality == Modality::audio ? video->audio_path : video->video_path);
      auto it = media_digest.find(item.media.string());
      if (it == media_digest.end()) {
        std::string digest = fs::exists(item.media) ? sha256_file(item.media) : "missing";
        it = media_digest.emplace(item.media.string(), std::move(digest)).first;
      }
      source = it->second + "@" + format_time(u.start) + "-" + format_time(u.end);
    }
    item.content_hash = sha256_hex(source);
    items.push_back(std::move(item));
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const fs::path npy = tensor_path(modality, items[i].utterance->utterance_id);
    const fs::path side = sidecar_of(npy);
    bool fresh = false;
    if (fs::exists(npy) && fs::exists(side)) {
      try {
        const auto meta = read_json(side);
        fresh = meta.value("pipeline_version", "") == report.pipeline_version &&
                meta.value("content_hash", "") == items[i].content_hash;
      } catch (const std::exception&) {
        fresh = false;
      }
    }
    if (fresh)
      ++report.skipped;
    else
      pending.push_back(i);
  }

  text::EmbeddingTable table;
  if (modality == Modality::text && !pending.empty())
    table = text::load_embeddings(settings_.embeddings, settings_.embedding_dim);

  std::vector<std::optional<CacheFailure>> outcome(pending.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++) {
      const WorkItem& item = items[pending[k]];
      const std::string& id = item.utterance->utterance_id;
      try {
        Tensor tensor;
        nlohmann::json meta{{"utterance_id", id}, {"modality", std::string(name(modality))}};
        if (modality == Modality::audio) {
          const audio::AudioSignal whole = audio::read_wav(item.media);
          const audio::AudioSignal clip = audio::slice(whole, item.utterance->start, item.utterance->end);
          const audio::FunctionalVector fv = audio::utterance_functionals(clip, settings_.audio);
          tensor.shape = {static_cast<std::int64_t>(fv.size())};
          tensor.data.assign(fv.values.begin(), fv.values.end());
          meta["descriptor_names"] = audio::descriptor_names(settings_.audio.lld);
          meta["functionals"] = settings_.audio.mean_only ? std::vector<std::string>{"mean"} : audio::functional_names();
          meta["frame_hop"] = settings_.audio.framing.hop;
          meta["voicing_threshold"] = settings_.audio.lld.voicing_threshold;
          meta["speaker_id"] = item.speaker;
        } else if (modality == Modality::visual) {
          auto video = visual::open_video(item.media);
          const visual::FrameTensor f =
              visual::sample_frames(*video, item.utterance->start, item.utterance->end, settings_.visual);
          tensor.shape = {f.geometry.frames, f.geometry.height, f.geometry.width, 3};
          tensor.data = f.values;
          meta["decoder"] = video->identity();
        } else {
          const text::TextTensor t = text::embed_sequence(item.utterance->tokens, table, settings_.text_window);
          tensor.shape = {t.values.rows(), t.values.cols()};
          tensor.data.assign(t.values.data(), t.values.data() + t.values.size());
          meta["length"] = t.length();
        }
        for (float v : tensor.data)
          if (!std::isfinite(v)) throw Error(ErrorCode::ValidationError, "extracted features are not finite", id);
        meta["shape"] = tensor.shape;
        meta["dtype"] = "float32";
        meta["pipeline_version"] = report.pipeline_version;
        meta["content_hash"] = item.content_hash;
        const fs::path npy = tensor_path(modality, id);
        write_npy(npy, tensor);
        write_json(sidecar_of(npy), meta);
      } catch (const Error& e) {
        outcome[k] = CacheFailure{id, e.code(), e.what()};
      } catch (const std::exception& e) {
        outcome[k] = CacheFailure{id, ErrorCode::IoError, e.what()};
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(pending.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }
  for (auto& o : outcome) {
    if (o)
      report.failures.push_back(std::move(*o));
    else
      ++report.built;
  }
  std::sort(report.failures.begin(), report.failures.end(),
            [](const CacheFailure& a, const CacheFailure& b) { return a.utterance_id < b.utterance_id; });
  return report;
}

Tensor FeatureCache::load(Modality modality, const std::string& utterance_id, nlohmann::json* meta) const {
  const fs::path npy = tensor_path(modality, utterance_id);
  const fs::path side = sidecar_of(npy);
  if (!fs::exists(npy) || !fs::exists(side))
    throw Error(ErrorCode::IoError, "no cached " + std::string(name(modality)) + " features; run the features command",
                utterance_id);
  nlohmann::json m = read_json(side);
  if (m.value("pipeline_version", "") != version(modality))
    throw Error(ErrorCode::ValidationError,
                "cached " + std::string(name(modality)) + " features were built by " +
                    m.value("pipeline_version", std::string("an unknown pipeline")) + ", current is " + version(modality),
                utterance_id);
  Tensor t = read_npy(npy);
  if (meta != nullptr) *meta = std::move(m);
  return t;
}

}  // namespace polyfuse::pipeline
