#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "polyfuse/annotation/store.hpp"

namespace httplib {
class Server;
}

namespace polyfuse::annotation {

/// HTTP + JSON front end of an AnnotationStore:
///   GET  /api/tasks/next?annotator=ID
///   GET  /api/media/{utterance_id}.wav   trimmed audio clip
///   GET  /api/media/{utterance_id}.mp4   trimmed video clip
///   POST /api/annotations                AnnotationRecord body
///   GET  /api/agreement
///   GET  /api/export
/// Media responses honour Range requests. Errors are {"error", "message"}
/// with 400 for invalid input and 404 for unknown ids.
class AnnotationServer {
 public:
  /// `static_dir`, when non-empty, is served at "/" (the browser client).
  explicit AnnotationServer(AnnotationStore& store, std::filesystem::path static_dir = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds to an ephemeral port and returns it (-1 on failure).
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Serves until stop() is called.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  void routes();
  std::string clip(const std::string& utterance_id, const std::string& extension);

  AnnotationStore& store_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex clip_mutex_;
  std::map<std::string, std::string> clip_cache_;
};

}  // namespace polyfuse::annotation
