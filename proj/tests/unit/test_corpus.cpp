#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "polyfuse/core/error.hpp"
#include "polyfuse/corpus/agreement.hpp"
#include "polyfuse/corpus/labels.hpp"
#include "polyfuse/corpus/manifest.hpp"
#include "polyfuse/corpus/splits.hpp"
#include "polyfuse/corpus/statistics.hpp"

using namespace polyfuse;
using namespace polyfuse::corpus;
using fixtures::make_annotation;
using fixtures::make_utterance;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected polyfuse::Error");
  return ErrorCode::IoError;
}

std::string record_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.record();
  }
  return {};
}

CorpusManifest two_video_manifest() {
  CorpusManifest m;
  m.videos.push_back({"v1", "alice", "media/v1.wav", "media/v1.avi", 30.0, SpeakerMeta{"female", "30-40"}});
  m.videos.push_back({"v2", "bob", "media/v2.wav", "media/v2.avi", 20.0, std::nullopt});
  m.utterances.push_back(make_utterance("u1", "v1", 0.0, 6.0, "فیلم خوب بود"));
  m.utterances.push_back(make_utterance("u2", "v1", 6.5, 12.0, "bad acting"));
  m.utterances.push_back(make_utterance("u3", "v2", 1.0, 7.0, "good movie!"));
  m.annotations.push_back(make_annotation("u1", "a1", 1, Subjectivity::subjective, {Gesture::smile}));
  m.annotations.push_back(make_annotation("u1", "a2", 1));
  m.annotations.push_back(make_annotation("u2", "a1", -1));
  m.sort_records();
  return m;
}

void write_media(const fixtures::TempDir& dir, const CorpusManifest& m) {
  for (const auto& v : m.videos) {
    fixtures::touch(dir.path() / v.audio_path);
    fixtures::touch(dir.path() / v.video_path);
  }
}

}  // namespace

TEST_CASE("load_manifest round-trips a well-formed two-video manifest") {
  fixtures::TempDir dir;
  auto m = two_video_manifest();
  write_media(dir, m);
  save_manifest(m, dir / "manifest.jsonl");

  auto loaded = load_manifest(dir / "manifest.jsonl");
  CHECK(loaded.videos.size() == 2);
  CHECK(loaded.utterances.size() == 3);
  CHECK(loaded.annotations.size() == 3);
  CHECK(loaded.videos[0].speaker_meta == SpeakerMeta{"female", "30-40"});
  CHECK(loaded.find_utterance("u1")->tokens.size() == 3);
  CHECK(to_jsonl(loaded) == to_jsonl(m));
}

TEST_CASE("load_manifest rejects invalid manifests naming the record") {
  fixtures::TempDir dir;
  auto base = two_video_manifest();
  write_media(dir, base);

  SUBCASE("dangling annotation") {
    auto m = base;
    m.annotations.push_back(make_annotation("u404", "a1", 1));
    save_manifest(m, dir / "m.jsonl");
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::DanglingReference);
    CHECK(record_of([&] { load_manifest(dir / "m.jsonl"); }) == "u404/a1");
  }
  SUBCASE("dangling video") {
    auto m = base;
    m.utterances.push_back(make_utterance("u9", "v9", 0, 1, "x"));
    save_manifest(m, dir / "m.jsonl");
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::DanglingReference);
  }
  SUBCASE("missing media") {
    auto m = base;
    m.videos[1].audio_path = "media/absent.wav";
    save_manifest(m, dir / "m.jsonl");
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::MissingMedia);
    CHECK(record_of([&] { load_manifest(dir / "m.jsonl"); }) == "v2");
    CHECK_NOTHROW(load_manifest(dir / "m.jsonl", LoadOptions{.verify_media = false}));
  }
  SUBCASE("overlapping utterances") {
    auto m = base;
    m.utterances.push_back(make_utterance("u4", "v1", 11.0, 14.0, "x"));
    save_manifest(m, dir / "m.jsonl");
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::OverlappingUtterances);
    CHECK(record_of([&] { load_manifest(dir / "m.jsonl"); }) == "u4");
  }
  SUBCASE("segment beyond video duration") {
    auto m = base;
    m.utterances.push_back(make_utterance("u5", "v2", 15.0, 25.0, "x"));
    save_manifest(m, dir / "m.jsonl");
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::InvalidRecord);
  }
  SUBCASE("schema version") {
    std::string text = to_jsonl(base);
    text.replace(text.find("\"format_version\":1"), 18, "\"format_version\":7");
    std::ofstream(dir / "m.jsonl") << text;
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::SchemaVersionMismatch);
  }
  SUBCASE("duplicate annotation") {
    auto m = base;
    m.annotations.push_back(make_annotation("u2", "a1", 1));
    save_manifest(m, dir / "m.jsonl");
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::DuplicateAnnotation);
  }
  SUBCASE("out-of-enum polarity") {
    std::string text = to_jsonl(base);
    text += R"({"kind":"annotation","utterance_id":"u3","annotator_id":"a1","polarity":2,"subjectivity":"subjective","gestures":[]})";
    std::ofstream(dir / "m.jsonl") << text;
    CHECK(code_of([&] { load_manifest(dir / "m.jsonl"); }) == ErrorCode::InvalidRecord);
  }
}

TEST_CASE("record order in the file does not matter") {
  fixtures::TempDir dir;
  auto m = two_video_manifest();
  write_media(dir, m);
  std::string text = to_jsonl(m);
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  std::reverse(lines.begin() + 1, lines.end());
  std::string shuffled;
  for (auto& l : lines) shuffled += l + "\n";
  auto a = parse_manifest(text, dir.path());
  auto b = parse_manifest(shuffled, dir.path());
  CHECK(a == b);
}

TEST_CASE("resolve_labels applies strict majority") {
  CorpusManifest m = fixtures::grid_manifest(1, 4);
  const auto& u = m.utterances;
  auto add = [&](const std::string& uid, std::vector<std::pair<int, Subjectivity>> votes) {
    int k = 0;
    for (auto [p, s] : votes) m.annotations.push_back(make_annotation(uid, "a" + std::to_string(k++), p, s));
  };
  const auto S = Subjectivity::subjective, O = Subjectivity::objective;
  add(u[0].utterance_id, {{1, S}, {1, S}, {-1, S}});
  add(u[1].utterance_id, {{1, S}, {0, S}, {-1, S}});
  add(u[2].utterance_id, {{1, S}, {1, S}, {0, O}});
  add(u[3].utterance_id, {{0, O}, {0, O}, {1, S}});
  m.sort_records();

  auto r = resolve_labels(m);
  CHECK(r.resolved_labels.at(u[0].utterance_id).polarity == 1);
  CHECK(r.resolved_labels.at(u[0].utterance_id).trainable());
  CHECK_FALSE(r.resolved_labels.at(u[1].utterance_id).polarity.has_value());
  CHECK_FALSE(r.resolved_labels.at(u[1].utterance_id).trainable());
  CHECK(r.resolved_labels.at(u[2].utterance_id).subjectivity == S);
  CHECK(r.resolved_labels.at(u[2].utterance_id).polarity == 1);
  CHECK(r.resolved_labels.at(u[3].utterance_id).subjectivity == O);
  CHECK_FALSE(r.resolved_labels.at(u[3].utterance_id).polarity.has_value());

  CHECK(resolve_labels(r) == r);  // idempotent

  std::vector<std::string> required{u[0].utterance_id, "never_annotated"};
  CHECK(code_of([&] { resolve_labels(m, ResolutionPolicy::majority_discard_ties, required); }) ==
        ErrorCode::NoAnnotations);
}

TEST_CASE("compute_agreement is pairwise percent agreement") {
  std::vector<AnnotationRecord> same, aab;
  for (int i = 0; i < 5; ++i) {
    const std::string uid = "u" + std::to_string(i);
    for (const char* a : {"a1", "a2", "a3"}) same.push_back(make_annotation(uid, a, 1, Subjectivity::subjective, {Gesture::smile}));
    aab.push_back(make_annotation(uid, "a1", 1, Subjectivity::subjective, {Gesture::smile}));
    aab.push_back(make_annotation(uid, "a2", 1, Subjectivity::subjective, {Gesture::smile}));
    aab.push_back(make_annotation(uid, "a3", -1, Subjectivity::objective, {Gesture::frown, Gesture::smile}));
  }
  for (auto facet : {AgreementFacet::polarity, AgreementFacet::subjectivity, AgreementFacet::gestures}) {
    CHECK(compute_agreement(same, facet) == doctest::Approx(100.0));
    // pairs (a1,a2) agree, (a1,a3) and (a2,a3) do not: 1 of 3
    CHECK(compute_agreement(aab, facet) == doctest::Approx(100.0 / 3.0));
    CHECK(format_percentage(compute_agreement(aab, facet)) == "33.33%");
  }
  CHECK(format_percentage(89.23) == "89.23%");

  std::vector<AnnotationRecord> single{make_annotation("u0", "a1", 1), make_annotation("u1", "a1", 1)};
  CHECK(code_of([&] { compute_agreement(single, AgreementFacet::polarity); }) == ErrorCode::InsufficientOverlap);
}

TEST_CASE("compute_agreement stays in [0, 100] and is 100 only for identical labels") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AnnotationRecord> recs;
    bool all_equal = true;
    const int items = 1 + static_cast<int>(rng.index(6));
    for (int i = 0; i < items; ++i) {
      const int n = 2 + static_cast<int>(rng.index(3));
      int first = -2;
      for (int a = 0; a < n; ++a) {
        const int p = static_cast<int>(rng.index(3)) - 1;
        if (first == -2) first = p;
        else if (p != first) all_equal = false;
        recs.push_back(make_annotation("u" + std::to_string(i), "a" + std::to_string(a), p));
      }
    }
    const double v = compute_agreement(recs, AgreementFacet::polarity);
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
    CHECK((v == 100.0) == all_equal);
  }
}

TEST_CASE("compute_statistics") {
  SUBCASE("empty manifest") { CHECK(compute_statistics(CorpusManifest{}) == StatisticsReport{}); }
  SUBCASE("unique words by hand count") {
    CorpusManifest m;
    m.videos.push_back({"v", "s", "a", "b", 10.0, std::nullopt});
    m.utterances = {make_utterance("u1", "v", 0, 1, "a b"), make_utterance("u2", "v", 1, 2, "b c"),
                    make_utterance("u3", "v", 2, 3, "c")};
    CHECK(compute_statistics(m).unique_words == 3);
  }
  SUBCASE("dataset-scale fixture echoes its counts") {
    auto m = resolve_labels(fixtures::table5_manifest());
    auto s = compute_statistics(m);
    CHECK(s.positive == 468);
    CHECK(s.negative == 366);
    CHECK(s.subjective == 834);
    CHECK(s.objective == 180);
    CHECK(s.unique_words == 4065);
    CHECK(s.speakers == 24);
    CHECK(s.videos == 91);
    const auto text = render_statistics(s);
    CHECK(text.find("Total number of speakers") != std::string::npos);
    CHECK(to_json(s)["positive"] == 468);
  }
  SUBCASE("permutation invariance") {
    auto m = resolve_labels(fixtures::table5_manifest());
    auto shuffled = m;
    Rng rng(3);
    rng.shuffle(shuffled.videos.begin(), shuffled.videos.end());
    rng.shuffle(shuffled.utterances.begin(), shuffled.utterances.end());
    rng.shuffle(shuffled.annotations.begin(), shuffled.annotations.end());
    CHECK(compute_statistics(shuffled) == compute_statistics(m));
  }
}

TEST_CASE("filter_subjective") {
  auto m = fixtures::grid_manifest(1, 7);
  for (int i = 0; i < 7; ++i) {
    const auto subj = i < 5 ? Subjectivity::subjective : Subjectivity::objective;
    m.annotations.push_back(make_annotation(m.utterances[i].utterance_id, "a1", i < 5 ? 1 : 0, subj));
  }
  m.sort_records();
  auto r = resolve_labels(m);
  auto f = filter_subjective(r);
  CHECK(f.utterances.size() == 5);
  CHECK(f.annotations.size() == 5);
  CHECK(filter_subjective(f) == f);
  CHECK_NOTHROW(validate(f, LoadOptions{.verify_media = false}));

  auto all_obj = fixtures::grid_manifest(2, 3);
  for (const auto& u : all_obj.utterances)
    all_obj.annotations.push_back(make_annotation(u.utterance_id, "a1", 0, Subjectivity::objective));
  auto g = filter_subjective(resolve_labels(all_obj));
  CHECK(g.utterances.empty());
  CHECK(g.videos.size() == 2);

  auto t5 = filter_subjective(resolve_labels(fixtures::table5_manifest()));
  CHECK(t5.utterances.size() == 834);
}

TEST_CASE("make_splits partitions speakers") {
  auto m = fixtures::grid_manifest(10, 10);
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 12345ULL}) {
    auto s = make_splits(m, {0.6, 0.1, 0.3}, seed);
    CHECK(s.members(Split::train).size() == 60);
    CHECK(s.members(Split::validation).size() == 10);
    CHECK(s.members(Split::test).size() == 30);
    CHECK(make_splits(m, {0.6, 0.1, 0.3}, seed) == s);
    CHECK_NOTHROW(check_speaker_exclusive(m, s));
    CHECK(split_from_json(to_json(s)) == s);
  }
  CHECK(make_splits(m, {0.6, 0.1, 0.3}, 1).fingerprint() != make_splits(m, {0.6, 0.1, 0.3}, 2).fingerprint());

  CHECK(code_of([&] { make_splits(fixtures::grid_manifest(2, 10), {0.6, 0.1, 0.3}, 0); }) ==
        ErrorCode::TooFewSpeakers);
  CHECK(code_of([&] { make_splits(m, {0.6, 0.1, 0.2}, 0); }) == ErrorCode::ConfigError);
}

TEST_CASE("make_splits does not depend on record order") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = fixtures::random_manifest(rng);
    auto shuffled = m;
    rng.shuffle(shuffled.videos.begin(), shuffled.videos.end());
    rng.shuffle(shuffled.utterances.begin(), shuffled.utterances.end());
    shuffled.sort_records();
    CHECK(make_splits(m, {}, 9) == make_splits(shuffled, {}, 9));
  }
}

TEST_CASE("make_splits keeps every speaker in one split on random manifests") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = fixtures::random_manifest(rng);
    auto s = make_splits(m, {0.6, 0.1, 0.3}, rng.next());
    CHECK(s.split.size() == m.utterances.size());
    CHECK_NOTHROW(check_speaker_exclusive(m, s));
  }
}

TEST_CASE("check_speaker_exclusive detects a shared speaker") {
  auto m = fixtures::grid_manifest(4, 3);
  auto s = make_splits(m, {0.5, 0.25, 0.25}, 0);
  auto train = s.members(Split::train);
  s.split[train.front()] = Split::test;
  CHECK(code_of([&] { check_speaker_exclusive(m, s); }) == ErrorCode::SpeakerLeakage);
}
