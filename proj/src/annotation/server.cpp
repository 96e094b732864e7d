#include "polyfuse/annotation/server.hpp"

#include <httplib.h>

#include "polyfuse/audio/wav.hpp"
#include "polyfuse/core/error.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/corpus/manifest.hpp"
#include "polyfuse/visual/video.hpp"

namespace polyfuse::annotation {

namespace fs = std::filesystem;

namespace {

constexpr const char* kJson = "application/json";

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownUtterance:
    case ErrorCode::UnknownAnnotator:
    case ErrorCode::MissingMedia:
      return 404;
    case ErrorCode::DecodeFailure:
    case ErrorCode::IoError:
    case ErrorCode::WindowOutOfRange:
      return 500;
    default:
      return 400;
  }
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = status_for(code);
  res.set_content(nlohmann::json{{"error", std::string(to_string(code))}, {"message", message}}.dump(), kJson);
}

template <class F>
auto guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, ErrorCode::ValidationError, e.what());
    }
  };
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store, fs::path static_dir)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  routes();
  if (!static_dir.empty()) server_->set_mount_point("/", static_dir.string());
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::routes() {
  server_->Get("/api/tasks/next", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::string annotator = req.get_param_value("annotator");
                 if (annotator.empty()) annotator = req.get_header_value("X-Annotator-Id");
                 if (annotator.empty()) throw Error(ErrorCode::ValidationError, "annotator parameter is required");
                 const auto task = store_.next_task(annotator);
                 res.set_content(task ? nlohmann::json{{"task", task->to_json()}}.dump()
                                      : nlohmann::json{{"task", nullptr}}.dump(),
                                 kJson);
               }));

  server_->Get(R"(/api/media/([^/]+)\.(wav|mp4))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const std::string ext = req.matches[2];
                 res.set_content(clip(id, ext), ext == "wav" ? "audio/wav" : "video/mp4");
                 res.set_header("Accept-Ranges", "bytes");
               }));

  server_->Post("/api/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = nlohmann::json::parse(req.body, nullptr, false);
                  if (body.is_discarded()) throw Error(ErrorCode::ValidationError, "body is not JSON");
                  const corpus::AnnotationRecord record = corpus::annotation_from_json(body);
                  store_.submit(record);
                  res.status = 200;
                  res.set_content(nlohmann::json{{"status", "stored"}, {"record", corpus::to_json(record)}}.dump(), kJson);
                }));

  server_->Get("/api/agreement", guarded([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(store_.agreement_snapshot().dump(), kJson);
               }));

  server_->Get("/api/export", guarded([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(store_.export_manifest(), "application/x-ndjson");
               }));
}

std::string AnnotationServer::clip(const std::string& utterance_id, const std::string& extension) {
  const std::string key = utterance_id + "." + extension;
  {
    std::lock_guard lock(clip_mutex_);
    if (auto it = clip_cache_.find(key); it != clip_cache_.end()) return it->second;
  }
  const corpus::CorpusManifest& m = store_.base();
  const corpus::Utterance* u = m.find_utterance(utterance_id);
  if (u == nullptr) throw Error(ErrorCode::UnknownUtterance, "unknown utterance '" + utterance_id + "'");
  const corpus::VideoRecord* v = m.find_video(u->video_id);
  std::string bytes;
  if (extension == "wav") {
    bytes = audio::encode_wav(audio::slice(audio::read_wav(m.resolve(v->audio_path)), u->start, u->end));
  } else {
    auto source = visual::open_video(m.resolve(v->video_path));
    const int first = std::max(0, static_cast<int>(std::lround(u->start * source->fps())));
    const int last = std::min(source->frame_count(), static_cast<int>(std::lround(u->end * source->fps())));
    if (last <= first) throw Error(ErrorCode::WindowOutOfRange, "utterance has no frames", utterance_id);
    const auto frames = source->read_frames(first, last - first);
    const fs::path tmp = fs::temp_directory_path() / ("polyfuse_clip_" + std::to_string(::getpid()) + "_" +
                                                      std::to_string(std::hash<std::string>{}(key)) + ".mp4");
    visual::write_video(tmp, frames, source->fps(), visual::VideoCodec::mpeg4);
    bytes = read_file(tmp);
    fs::remove(tmp);
  }
  std::lock_guard lock(clip_mutex_);
  return clip_cache_.emplace(key, std::move(bytes)).first->second;
}

int AnnotationServer::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool AnnotationServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool AnnotationServer::listen_after_bind() { return server_->listen_after_bind(); }

void AnnotationServer::stop() {
  if (server_) server_->stop();
}

void AnnotationServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace polyfuse::annotation
