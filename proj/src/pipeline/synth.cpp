#include "polyfuse/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "polyfuse/audio/wav.hpp"
#include "polyfuse/core/error.hpp"
#include "polyfuse/core/rng.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/corpus/manifest.hpp"
#include "polyfuse/text/tokenizer.hpp"
#include "polyfuse/visual/video.hpp"

namespace polyfuse::pipeline {

namespace fs = std::filesystem;

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::separable:
      return "separable";
    case Scenario::xor_correlated:
      return "xor_correlated";
    case Scenario::ramp_temporal:
      return "ramp_temporal";
  }
  return "separable";
}

Scenario parse_scenario(std::string_view s) {
  for (Scenario x : {Scenario::separable, Scenario::xor_correlated, Scenario::ramp_temporal})
    if (to_string(x) == s) return x;
  throw Error(ErrorCode::ConfigError, "unknown scenario '" + std::string(s) + "'");
}

namespace {

constexpr const char* kPositiveWord = "خوب";
constexpr const char* kNegativeWord = "بد";
constexpr const char* kFillers[] = {"این",   "فیلم", "امروز", "من",      "آن",     "را",     "دیدم",
                                    "بود",   "خیلی", "کتاب",  "رستوران", "غذا",    "سرویس", "داستان",
                                    "بازیگر", "شهر",  "کار",   "روز",     "هفته",   "دوست"};
constexpr const char* kUnknownWord = "ناشناخته";  // deliberately absent from the embeddings

struct Plan {
  std::string id;
  double start = 0.0;
  int label = 0;
  CueBits cue{};
};

std::vector<CueBits> speaker_cues(const SynthOptions& o, int count, Rng& rng, std::vector<int>& labels) {
  std::vector<CueBits> cues;
  for (int k = 0; k < count; ++k) {
    // Balanced combinations per speaker so speaker statistics carry no label.
    const int combo = k % 4;
    const int a = combo & 1, b = (combo >> 1) & 1;
    CueBits c{};
    int y = 0;
    switch (o.scenario) {
      case Scenario::separable:
        y = a;
        c = {y, y, y};
        for (int& bit : c)
          if (rng.bernoulli(o.modality_noise)) bit = 1 - bit;
        break;
      case Scenario::xor_correlated:
        y = a ^ b;
        c = {a, b, static_cast<int>(rng.index(2))};
        break;
      case Scenario::ramp_temporal:
        y = a;
        c = {static_cast<int>(rng.index(2)), y, b};
        break;
    }
    cues.push_back(c);
    labels.push_back(y);
  }
  // Shuffle utterance order within the speaker, keeping cues and labels paired.
  std::vector<std::size_t> order(cues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  std::vector<CueBits> c2;
  std::vector<int> l2;
  const std::size_t base = labels.size() - cues.size();
  for (std::size_t i : order) {
    c2.push_back(cues[i]);
    l2.push_back(labels[base + i]);
  }
  std::copy(l2.begin(), l2.end(), labels.begin() + static_cast<std::ptrdiff_t>(base));
  return c2;
}

void render_audio(audio::AudioSignal& signal, const Plan& p, double seconds, double speaker_shift, Rng& rng) {
  const double f0 = (p.cue[0] ? 220.0 : 130.0) + speaker_shift + rng.uniform(-5.0, 5.0);
  const double amplitude = rng.uniform(0.25, 0.35);
  const auto first = static_cast<std::size_t>(std::lround(p.start * signal.sample_rate));
  const auto count = static_cast<std::size_t>(std::lround(seconds * signal.sample_rate));
  const double ramp = 0.05 * signal.sample_rate;
  double phase = rng.uniform(0.0, 2.0 * M_PI);
  for (std::size_t n = 0; n < count && first + n < signal.samples.size(); ++n) {
    const double env = std::min({1.0, n / ramp, (count - n) / ramp});
    phase += 2.0 * M_PI * f0 / signal.sample_rate;
    double v = 0.0;
    for (int k = 1; k <= 5; ++k) v += std::sin(k * phase) / k;
    signal.samples[first + n] += amplitude * env * v / 2.3;
  }
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); }

visual::RgbImage render_frame(const SynthOptions& o, double level, double blob_phase, Rng& rng) {
  visual::RgbImage img{o.frame_width, o.frame_height, {}};
  img.pixels.resize(static_cast<std::size_t>(o.frame_width) * o.frame_height * 3);
  const double cx = o.frame_width * (0.5 + 0.15 * std::sin(blob_phase));
  const double cy = o.frame_height * 0.45;
  const double radius = o.frame_height * 0.22;
  for (int y = 0; y < o.frame_height; ++y)
    for (int x = 0; x < o.frame_width; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      const double shade = level * (d < radius ? 1.1 : 0.9) + 0.04 * (static_cast<double>(y) / o.frame_height - 0.5);
      const double noise = rng.uniform(-0.01, 0.01);
      auto* px = &img.pixels[(static_cast<std::size_t>(y) * o.frame_width + x) * 3];
      px[0] = to_byte(shade + noise + 0.02);
      px[1] = to_byte(shade + noise);
      px[2] = to_byte(shade + noise - 0.02);
    }
  return img;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

SynthCorpus generate_corpus(const fs::path& dir, const SynthOptions& o) {
  if (o.utterances < 4 || o.speakers < 3 || o.utterances < 2 * o.speakers)
    throw Error(ErrorCode::ConfigError, "synthetic corpus needs at least 3 speakers and 2 utterances per speaker");
  if (o.modality_noise < 0.0 || o.modality_noise > 0.5)
    throw Error(ErrorCode::ConfigError, "modality noise must lie in [0, 0.5]");
  fs::create_directories(dir / "media");
  Rng rng(o.seed);
  SynthCorpus out;
  out.manifest.base_dir = dir;

  for (int s = 0; s < o.speakers; ++s) {
    const int count = o.utterances / o.speakers + (s < o.utterances % o.speakers ? 1 : 0);
    char sid[16], vid[16];
    std::snprintf(sid, sizeof sid, "spk%02d", s + 1);
    std::snprintf(vid, sizeof vid, "vid%02d", s + 1);
    Rng srng = rng.split();
    std::vector<int> labels;
    const std::vector<CueBits> cues = speaker_cues(o, count, srng, labels);

    std::vector<Plan> plans;
    double t = o.gap_seconds;
    for (int k = 0; k < count; ++k) {
      char uid[32];
      std::snprintf(uid, sizeof uid, "%s_u%03d", vid, k);
      plans.push_back({uid, t, labels[static_cast<std::size_t>(k)], cues[static_cast<std::size_t>(k)]});
      t += o.utterance_seconds + o.gap_seconds;
    }
    const int frames = static_cast<int>(std::ceil(t * o.fps));
    const double duration = frames / o.fps;

    audio::AudioSignal signal;
    signal.sample_rate = o.sample_rate;
    signal.samples.assign(static_cast<std::size_t>(std::lround(duration * o.sample_rate)), 0.0);
    for (double& v : signal.samples) v = srng.uniform(-0.003, 0.003);
    const double speaker_shift = srng.uniform(-8.0, 8.0);
    for (const Plan& p : plans) render_audio(signal, p, o.utterance_seconds, speaker_shift, srng);
    audio::write_wav(dir / "media" / (std::string(vid) + ".wav"), signal);

    std::vector<visual::RgbImage> images;
    std::vector<double> level(static_cast<std::size_t>(frames), 0.5);
    std::vector<double> levels_lo(plans.size()), levels_hi(plans.size());
    for (std::size_t k = 0; k < plans.size(); ++k) {
      levels_lo[k] = srng.uniform(0.15, 0.35);
      levels_hi[k] = srng.uniform(0.65, 0.85);
    }
    for (int f = 0; f < frames; ++f) {
      const double time = (f + 0.5) / o.fps;
      for (std::size_t k = 0; k < plans.size(); ++k) {
        const Plan& p = plans[k];
        if (time < p.start || time >= p.start + o.utterance_seconds) continue;
        if (o.scenario == Scenario::ramp_temporal) {
          const double u = (time - p.start) / o.utterance_seconds;
          level[static_cast<std::size_t>(f)] = p.cue[1] ? levels_lo[k] + (levels_hi[k] - levels_lo[k]) * u
                                                        : levels_hi[k] + (levels_lo[k] - levels_hi[k]) * u;
        } else {
          level[static_cast<std::size_t>(f)] = p.cue[1] ? levels_hi[k] : levels_lo[k];
        }
      }
      images.push_back(render_frame(o, level[static_cast<std::size_t>(f)], 0.4 * f, srng));
    }
    visual::write_video(dir / "media" / (std::string(vid) + ".avi"), images, o.fps);

    out.manifest.videos.push_back({vid, sid, "media/" + std::string(vid) + ".wav", "media/" + std::string(vid) + ".avi",
                                   duration, corpus::SpeakerMeta{s % 2 ? "female" : "male", s % 3 ? "25-34" : "35-44"}});
    for (const Plan& p : plans) {
      std::vector<std::string> words;
      const int fill = 3 + static_cast<int>(srng.index(5));
      for (int w = 0; w < fill; ++w) words.push_back(kFillers[srng.index(std::size(kFillers))]);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(srng.index(words.size() + 1)),
                   p.cue[2] ? kPositiveWord : kNegativeWord);
      if (srng.bernoulli(0.2)) words.push_back(kUnknownWord);
      std::string transcript;
      for (const auto& w : words) transcript += (transcript.empty() ? "" : " ") + w;
      corpus::Utterance u{p.id, vid, p.start, p.start + o.utterance_seconds, transcript, {}};
      u.tokens = text::tokenize(transcript);
      out.manifest.utterances.push_back(u);
      for (int a = 0; a < o.annotators; ++a) {
        corpus::AnnotationRecord r;
        r.utterance_id = p.id;
        r.annotator_id = "ann" + std::to_string(a + 1);
        r.polarity = p.label ? 1 : -1;
        r.subjectivity = corpus::Subjectivity::subjective;
        if (p.label) r.gestures.insert(corpus::Gesture::smile);
        out.manifest.annotations.push_back(r);
      }
      out.labels[p.id] = p.label;
      out.cues[p.id] = p.cue;
    }
  }

  // Word vectors for every filler and keyword.
  std::string vec;
  std::vector<std::string> vocab(std::begin(kFillers), std::end(kFillers));
  vocab.push_back(kPositiveWord);
  vocab.push_back(kNegativeWord);
  vec += std::to_string(vocab.size()) + " " + std::to_string(o.embedding_dim) + "\n";
  Rng erng(o.seed ^ 0x5eedULL);
  for (const auto& w : vocab) {
    vec += w;
    for (int d = 0; d < o.embedding_dim; ++d) vec += " " + fmt(erng.normal(0.0, 0.4));
    vec += "\n";
  }
  out.embeddings_path = dir / "embeddings.vec";
  write_file_atomic(out.embeddings_path, vec);

  out.manifest.sort_records();
  out.manifest_path = dir / "manifest.jsonl";
  corpus::save_manifest(out.manifest, out.manifest_path);
  out.manifest = corpus::load_manifest(out.manifest_path);
  return out;
}

}  // namespace polyfuse::pipeline
