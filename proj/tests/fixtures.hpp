#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "polyfuse/core/rng.hpp"
#include "polyfuse/corpus/manifest.hpp"
#include "polyfuse/corpus/types.hpp"
#include "polyfuse/text/tokenizer.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using namespace polyfuse::corpus;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("polyfuse_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void touch(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << "";
}

inline Utterance make_utterance(const std::string& id, const std::string& video, double start, double end,
                                const std::string& transcript) {
  Utterance u{id, video, start, end, transcript, {}};
  u.tokens = polyfuse::text::tokenize(transcript);
  return u;
}

inline AnnotationRecord make_annotation(const std::string& utt, const std::string& annotator, int polarity,
                                        Subjectivity subj = Subjectivity::subjective, GestureSet gestures = {}) {
  AnnotationRecord a;
  a.utterance_id = utt;
  a.annotator_id = annotator;
  a.polarity = polarity;
  a.subjectivity = subj;
  a.gestures = std::move(gestures);
  return a;
}

/// `speakers` speakers, one video each, `per_speaker` 1-second utterances.
/// Media paths are placeholders; load with verify_media = false or touch them.
inline CorpusManifest grid_manifest(int speakers, int per_speaker) {
  CorpusManifest m;
  for (int s = 0; s < speakers; ++s) {
    const std::string vid = "v" + std::to_string(100 + s);
    m.videos.push_back({vid, "spk" + std::to_string(100 + s), "media/" + vid + ".wav", "media/" + vid + ".avi",
                        static_cast<double>(per_speaker) + 1.0, std::nullopt});
    for (int k = 0; k < per_speaker; ++k) {
      const std::string uid = vid + "_u" + std::to_string(100 + k);
      m.utterances.push_back(make_utterance(uid, vid, k, k + 0.9, "word" + std::to_string(k)));
    }
  }
  m.sort_records();
  return m;
}

/// Random manifest with uneven speaker masses for split property tests.
inline CorpusManifest random_manifest(polyfuse::Rng& rng) {
  CorpusManifest m;
  const int speakers = 3 + static_cast<int>(rng.index(28));
  int uid = 0;
  for (int s = 0; s < speakers; ++s) {
    const std::string spk = "s" + std::to_string(rng.index(1000000));
    const int videos = 1 + static_cast<int>(rng.index(3));
    for (int v = 0; v < videos; ++v) {
      const std::string vid = spk + "_v" + std::to_string(v);
      const int n = 1 + static_cast<int>(rng.index(40));
      m.videos.push_back({vid, spk, "a.wav", "b.avi", n + 1.0, std::nullopt});
      for (int k = 0; k < n; ++k)
        m.utterances.push_back(make_utterance("u" + std::to_string(uid++), vid, k, k + 0.5, "x"));
    }
  }
  m.sort_records();
  return m;
}

/// Corpus at dataset-statistics scale: 24 speakers over 91 videos, 1014
/// utterances (468 positive, 366 negative, 180 objective), three annotators
/// each, and 4065 distinct words.
inline CorpusManifest table5_manifest() {
  CorpusManifest m;
  const int speakers = 24, videos = 91, utterances = 1014;
  for (int v = 0; v < videos; ++v) {
    const std::string vid = "vid" + std::to_string(1000 + v);
    m.videos.push_back({vid, "speaker" + std::to_string(100 + v % speakers), "a.wav", "b.avi", 600.0, std::nullopt});
  }
  int word = 0;
  const int total_words = 4065;
  for (int i = 0; i < utterances; ++i) {
    const std::string vid = "vid" + std::to_string(1000 + i % videos);
    const double start = 6.0 * (i / videos);
    std::string transcript;
    // spread the 4065 distinct words over the utterances, repeating earlier ones
    const int take = (total_words - word + (utterances - i) - 1) / (utterances - i);
    for (int k = 0; k < take; ++k) transcript += "w" + std::to_string(word++) + " ";
    transcript += "w0";
    const std::string uid = "utt" + std::to_string(10000 + i);
    m.utterances.push_back(make_utterance(uid, vid, start, start + 5.5, transcript));
    int polarity = 0;
    Subjectivity subj = Subjectivity::subjective;
    if (i < 468) polarity = 1;
    else if (i < 468 + 366) polarity = -1;
    else subj = Subjectivity::objective;
    for (const char* ann : {"ann1", "ann2", "ann3"}) m.annotations.push_back(make_annotation(uid, ann, polarity, subj));
  }
  m.sort_records();
  return m;
}

}  // namespace fixtures
