#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "error_capture.hpp"
#include "fixtures.hpp"
#include "oracles/dsp_reference.hpp"
#include "polyfuse/audio/pipeline.hpp"

using namespace polyfuse;
using namespace polyfuse::audio;
using fixtures::code_of;

namespace {

AudioSignal tone(double hz, double seconds, double amplitude = 0.5, int rate = 16000) {
  AudioSignal s;
  s.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::lround(seconds * rate));
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(amplitude * std::sin(2 * std::numbers::pi * hz * i / rate));
  return s;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

LldMatrix llds_of_frame(const std::vector<double>& frame, int rate = 16000) {
  FrameMatrix fm;
  fm.sample_rate = rate;
  fm.frames = MatrixXdR::Map(frame.data(), 1, static_cast<Eigen::Index>(frame.size()));
  fm.window = hann_window(static_cast<int>(frame.size()));
  return extract_llds(fm);
}

}  // namespace

TEST_CASE("framing arithmetic") {
  const FrameMatrix fm = frame_signal(tone(100, 1.0));
  CHECK(fm.count() == 39);
  CHECK(fm.frame_samples() == 800);
  CHECK(1.0 / fm.hop == doctest::Approx(40.0));
  AudioSignal ramp;
  for (int i = 0; i < 16000; ++i) ramp.samples.push_back(i / 16000.0);
  const FrameMatrix r = frame_signal(ramp);
  CHECK(r.frames(1, 0) - r.frames(0, 0) == doctest::Approx(400 / 16000.0));
  CHECK(r.frames(38, 0) == doctest::Approx(38 * 400 / 16000.0));

  AudioSignal one = tone(100, 0.05);
  CHECK(frame_signal(one).count() == 1);
  one.samples.pop_back();
  CHECK(code_of([&] { frame_signal(one); }) == ErrorCode::TooShort);

  // 44.1 kHz: fractional hop, still floor((len - frame) / hop) + 1 frames.
  const FrameMatrix cd = frame_signal(tone(100, 1.0, 0.5, 44100));
  CHECK(cd.count() == static_cast<Eigen::Index>(std::floor((44100 - 2205) / 1102.5)) + 1);
}

TEST_CASE("constant frame has rms equal to its amplitude") {
  for (double a : {0.1, 0.5, 0.9}) {
    const LldMatrix l = llds_of_frame(std::vector<double>(800, a));
    CHECK(l.values(0, l.column("rms")) == doctest::Approx(a).epsilon(1e-12));
    CHECK(l.values(0, l.column("loudness")) == doctest::Approx(std::pow(a, 0.3)));
    CHECK(l.values(0, l.column("pitch")) == 0.0);
  }
}

TEST_CASE("silent frames follow the zero conventions") {
  const LldMatrix l = llds_of_frame(std::vector<double>(800, 0.0));
  CHECK(l.values(0, l.column("pitch")) == 0.0);
  CHECK(l.values(0, l.column("voicing")) == 0.0);
  CHECK(l.values(0, l.column("centroid")) == 0.0);
  CHECK(l.values.allFinite());
}

TEST_CASE("pure tones: pitch and centroid") {
  for (double hz : {120.0, 220.0, 330.0, 440.0}) {
    const LldMatrix l = extract_llds(frame_signal(tone(hz, 0.5)));
    for (Eigen::Index r = 0; r < l.values.rows(); ++r) {
      CHECK(std::abs(l.values(r, l.column("pitch")) - hz) <= 5.0);
      CHECK(l.values(r, l.column("voicing")) > 0.9);
    }
    CHECK(std::abs(l.values(3, l.column("centroid")) - hz) <= 10.0);
    const AudioSignal one = tone(hz, 0.05);
    CHECK(std::abs(oracle::centroid(one.samples, 16000) - hz) <= 10.0);
  }
}

TEST_CASE("descriptors match the brute-force reference on random frames") {
  Rng rng(11);
  double worst_mfcc = 0.0, worst_centroid = 0.0, worst_flatness = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = trial % 2 ? 800 : 441;
    const int rate = trial % 2 ? 16000 : 8820 * 5;
    std::vector<double> frame(static_cast<std::size_t>(n));
    const double f0 = rng.uniform(80, 400);
    for (int i = 0; i < n; ++i)
      frame[static_cast<std::size_t>(i)] = 0.3 * std::sin(2 * std::numbers::pi * f0 * i / rate) + rng.normal(0, 0.1);
    const LldMatrix l = llds_of_frame(frame, rate);
    const auto ref = oracle::mfcc(frame, rate);
    for (int j = 0; j < 12; ++j)
      worst_mfcc = std::max(worst_mfcc, rel_err(l.values(0, l.column("mfcc" + std::to_string(j + 1))), ref[j]));
    worst_centroid = std::max(worst_centroid, rel_err(l.values(0, l.column("centroid")), oracle::centroid(frame, rate)));
    worst_flatness = std::max(worst_flatness, rel_err(l.values(0, l.column("flatness")), oracle::flatness(frame)));
  }
  CHECK(worst_mfcc < 1e-6);
  CHECK(worst_centroid < 1e-6);
  CHECK(worst_flatness < 1e-6);
}

TEST_CASE("amplitude scaling covariance") {
  Rng rng(12);
  AudioSignal s = tone(180, 0.4, 0.3);
  for (double& v : s.samples) v += rng.normal(0, 0.01);
  const LldMatrix base = extract_llds(frame_signal(s));
  for (double k : {0.25, 2.0}) {
    AudioSignal scaled = s;
    for (double& v : scaled.samples) v *= k;
    const LldMatrix l = extract_llds(frame_signal(scaled));
    for (Eigen::Index r = 0; r < l.values.rows(); ++r) {
      CHECK(l.values(r, 0) == doctest::Approx(k * base.values(r, 0)).epsilon(1e-12));
      for (const char* name : {"pitch", "centroid", "flatness"})
        CHECK(std::abs(l.values(r, l.column(name)) - base.values(r, base.column(name))) < 1e-9);
    }
  }
}

TEST_CASE("functionals on hand-computed tracks") {
  const auto c = track_functionals({2.5, 2.5, 2.5});
  CHECK(c[0] == 2.5);
  CHECK(c[2] == 0.0);
  CHECK(c[4] == 0.0);
  CHECK(c[5] == 0.0);
  CHECK(c[6] == 2.5);
  CHECK(c[7] == 2.5);
  CHECK(c[8] == 2.5);

  const auto f = track_functionals({4, 1, 3, 2});
  CHECK(f[0] == doctest::Approx(2.5));
  CHECK(f[1] == doctest::Approx(std::sqrt(7.5)));
  CHECK(f[2] == doctest::Approx(std::sqrt(1.25)));
  CHECK(f[3] == doctest::Approx(std::pow(24.0, 0.25) / 2.5));
  CHECK(f[4] == doctest::Approx(0.0));
  CHECK(f[5] == doctest::Approx((2 * std::pow(1.5, 4) + 2 * std::pow(0.5, 4)) / 4 / (1.25 * 1.25)));
  CHECK(f[6] == doctest::Approx(1.75));
  CHECK(f[7] == doctest::Approx(2.5));
  CHECK(f[8] == doctest::Approx(3.25));

  const auto skew = track_functionals({0, 0, 0, 1});
  CHECK(skew[4] > 0.0);
  CHECK(skew[3] == 0.0);
}

TEST_CASE("functional vector layout and gating") {
  const LldMatrix l = extract_llds(frame_signal(tone(200, 0.6)));
  const FunctionalVector v = apply_functionals(l);
  CHECK(v.size() == descriptor_names().size() * 9);
  CHECK(v.size() == AudioPipelineConfig{}.dimension());
  CHECK(v.layout.front() == "rms.mean");
  CHECK(v.layout.back() == "mfcc12.q3");
  for (double x : v.values) CHECK(std::isfinite(x));

  FunctionalOptions mean_only;
  mean_only.mean_only = true;
  CHECK(apply_functionals(l, mean_only).size() == descriptor_names().size());

  Rng rng(13);
  AudioSignal noise;
  for (int i = 0; i < 8000; ++i) noise.samples.push_back(rng.uniform(-0.5, 0.5));
  const LldMatrix nl = extract_llds(frame_signal(noise));
  CHECK(code_of([&] { apply_functionals(nl); }) == ErrorCode::EmptyAfterGating);
  FunctionalOptions ungated;
  ungated.voiced_gate = false;
  CHECK(apply_functionals(nl, ungated).size() == v.size());
}

TEST_CASE("speaker z-standardization") {
  Rng rng(14);
  VectorMap vectors;
  SpeakerMap speakers;
  for (int s = 0; s < 3; ++s)
    for (int u = 0; u < 6; ++u) {
      const std::string id = "s" + std::to_string(s) + "u" + std::to_string(u);
      vectors[id] = {rng.normal(100.0 * s, 3.0), rng.normal(-5, 0.5), 7.0};
      speakers[id] = "spk" + std::to_string(s);
    }
  vectors["lonely"] = {1.0, 2.0, 3.0};
  speakers["lonely"] = "solo";
  const VectorMap z = speaker_zstandardize(vectors, speakers);
  for (int s = 0; s < 3; ++s)
    for (std::size_t d = 0; d < 3; ++d) {
      double mean = 0.0, sq = 0.0;
      for (int u = 0; u < 6; ++u) {
        const double x = z.at("s" + std::to_string(s) + "u" + std::to_string(u))[d];
        mean += x / 6;
        sq += x * x / 6;
      }
      CHECK(std::abs(mean) < 1e-9);
      const double sd = std::sqrt(sq - mean * mean);
      CHECK((sd == 0.0 || std::abs(sd - 1.0) < 1e-9));
    }
  CHECK(z.at("lonely") == std::vector<double>{0.0, 0.0, 0.0});

  const SpeakerStatistics stats = fit_speaker_statistics(vectors, speakers);
  CHECK(SpeakerStatistics::from_json(stats.to_json()).to_json() == stats.to_json());
  SpeakerMap unknown = speakers;
  unknown["lonely"] = "stranger";
  CHECK(code_of([&] { apply_speaker_statistics(stats, vectors, unknown); }) == ErrorCode::ValidationError);
}

TEST_CASE("wav input and output") {
  fixtures::TempDir dir;
  const AudioSignal s = tone(300, 0.2, 0.4);
  write_wav(dir.path() / "a.wav", s);
  const AudioSignal back = read_wav(dir.path() / "a.wav");
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) CHECK(std::abs(back.samples[i] - s.samples[i]) < 1.0 / 32767);

  const AudioSignal part = slice(back, 0.05, 0.15);
  CHECK(part.samples.size() == 1600);
  CHECK(code_of([&] { slice(back, 0.1, 0.5); }) == ErrorCode::WindowOutOfRange);

  {
    // 32-bit float stereo at 48 kHz.
    std::ofstream out(dir.path() / "f.wav", std::ios::binary);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out << "RIFF";
    u32(36 + 16);
    out << "WAVEfmt ";
    u32(16);
    u16(3);
    u16(2);
    u32(48000);
    u32(48000 * 8);
    u16(8);
    u16(32);
    out << "data";
    u32(16);
    for (float v : {0.5f, -0.5f, 0.25f, 0.75f}) out.write(reinterpret_cast<const char*>(&v), 4);
  }
  const AudioSignal f = read_wav(dir.path() / "f.wav");
  CHECK(f.sample_rate == 48000);
  CHECK(f.samples == std::vector<double>{0.0, 0.5});

  {
    std::ofstream out(dir.path() / "bad.wav", std::ios::binary);
    out << "RIFF1234WAVEjunk";
  }
  CHECK(code_of([&] { read_wav(dir.path() / "bad.wav"); }) == ErrorCode::DecodeFailure);
  CHECK(code_of([&] { read_wav(dir.path() / "none.wav"); }) == ErrorCode::MissingMedia);
}

TEST_CASE("pipeline version tracks configuration") {
  AudioPipelineConfig a, b;
  CHECK(a.version() == b.version());
  b.lld.voicing_threshold = 0.5;
  CHECK(a.version() != b.version());
  CHECK(AudioPipelineConfig::from_json(b.to_json()).version() == b.version());
}

TEST_CASE("audio mlp learns a sign-coded dimension") {
  Rng rng(15);
  auto make = [&](int n, nn::Mat<float>& x, std::vector<int>& y) {
    x.resize(n, 20);
    y.clear();
    for (int i = 0; i < n; ++i) {
      const int label = static_cast<int>(rng.index(2));
      for (int d = 0; d < 20; ++d) x(i, d) = static_cast<float>(rng.normal());
      x(i, 0) = static_cast<float>((label ? 1.0 : -1.0) * (0.5 + rng.uniform()));
      y.push_back(label);
    }
  };
  nn::Mat<float> xt, xv;
  std::vector<int> yt, yv;
  make(200, xt, yt);
  make(80, xv, yv);
  nn::MlpClassifier model("audio", audio_model_config(), 20);
  const auto log = model.train(xt, yt, xv, yv, {}, 3);
  CHECK(log.best_validation_accuracy >= 0.95);
  for (const auto& p : model.predict(xv)) CHECK(p.negative + p.positive == 1.0);
}
