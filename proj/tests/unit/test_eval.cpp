#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "error_capture.hpp"
#include "polyfuse/core/rng.hpp"
#include "polyfuse/eval/metrics.hpp"
#include "polyfuse/eval/report.hpp"

using namespace polyfuse;
using namespace polyfuse::eval;
using fixtures::code_of;

namespace {

// Rounds the exact rational 2PR/(P+R) of two-decimal cells to two decimals,
// half-up, in integer arithmetic. With P = p/100, R = r/100 the F value in
// hundredths is 2pr / (p + r); the rounded cell is floor((4pr + (p+r)) / (2(p+r))).
int oracle_f_cell(int p, int r) {
  if (p + r == 0) return 0;
  const long num = 4L * p * r + (p + r);
  const long den = 2L * (p + r);
  return static_cast<int>(num / den);
}

// Builds (predictions, truth) with the given confusion counts [true][pred].
std::pair<std::vector<int>, std::vector<int>> from_counts(int tn, int fp, int fn, int tp) {
  std::vector<int> pred, truth;
  auto add = [&](int t, int p, int n) {
    for (int i = 0; i < n; ++i) {
      truth.push_back(t);
      pred.push_back(p);
    }
  };
  add(0, 0, tn);
  add(0, 1, fp);
  add(1, 0, fn);
  add(1, 1, tp);
  return {pred, truth};
}

EvaluationReport sample_report() {
  EvaluationReport r;
  r.split_fingerprint = "0123456789abcdef";
  r.seeds = {{"split", 7}, {"train", 11}};
  Rng rng(3);
  for (const ModalitySet& set : table_order()) {
    auto [p, t] = from_counts(30 + static_cast<int>(rng.index(20)), static_cast<int>(rng.index(8)),
                              static_cast<int>(rng.index(8)), 25 + static_cast<int>(rng.index(20)));
    r.entries.push_back({make_configuration(set, FusionStrategy::early), compute_metrics(p, t)});
  }
  return r;
}

}  // namespace

TEST_CASE("f_measure is the harmonic mean and zero for zero inputs") {
  CHECK(f_measure(1.0, 1.0) == 1.0);
  CHECK(f_measure(0.0, 0.0) == 0.0);
  CHECK(f_measure(0.5, 0.0) == 0.0);
  CHECK(f_measure(0.92, 0.83) == doctest::Approx(0.8727).epsilon(1e-3));
  CHECK(f_measure(0.78, 0.84) == doctest::Approx(0.80889).epsilon(1e-4));
}

TEST_CASE("round_half_up agrees with the integer oracle on every two-decimal pair") {
  for (int p = 0; p <= 100; ++p)
    for (int r = 0; r <= 100; ++r) {
      const double rendered = round_half_up(f_measure(p / 100.0, r / 100.0), 2);
      REQUIRE(std::lround(rendered * 100.0) == oracle_f_cell(p, r));
    }
  CHECK(round_half_up(0.865, 2) == doctest::Approx(0.87));
  CHECK(round_half_up(0.8649, 2) == doctest::Approx(0.86));
  CHECK(round_half_up(89.235, 2) == doctest::Approx(89.24));
}

TEST_CASE("rendered F cells for the published unimodal rows") {
  CHECK(oracle_f_cell(92, 83) == 87);
  CHECK(oracle_f_cell(78, 84) == 81);
  CHECK(oracle_f_cell(76, 85) == 80);
  CHECK(oracle_f_cell(88, 94) == 91);
  CHECK(oracle_f_cell(87, 79) == 83);
}

TEST_CASE("perfect predictions") {
  const std::vector<int> y = {1, 0, 1, 1, 0};
  const Metrics m = compute_metrics(y, y);
  CHECK(m.positive == ClassMetrics{1.0, 1.0, 1.0});
  CHECK(m.negative == ClassMetrics{1.0, 1.0, 1.0});
  CHECK(m.accuracy == 100.0);
}

TEST_CASE("hand-counted confusion matrix") {
  auto [pred, truth] = from_counts(8, 2, 1, 9);
  const Metrics m = compute_metrics(pred, truth);
  CHECK(m.confusion.counts[0][0] == 8);
  CHECK(m.confusion.counts[1][1] == 9);
  CHECK(m.positive.precision == doctest::Approx(9.0 / 11.0));
  CHECK(m.positive.recall == doctest::Approx(0.9));
  CHECK(m.negative.precision == doctest::Approx(8.0 / 9.0));
  CHECK(m.negative.recall == doctest::Approx(0.8));
  CHECK(m.macro.precision == doctest::Approx((9.0 / 11.0 + 8.0 / 9.0) / 2.0));
  CHECK(m.micro.f_measure == doctest::Approx(0.85));
  CHECK(m.accuracy == doctest::Approx(85.0));
}

TEST_CASE("class never predicted has zero precision and F") {
  auto [pred, truth] = from_counts(5, 0, 5, 0);
  const Metrics m = compute_metrics(pred, truth);
  CHECK(m.positive == ClassMetrics{0.0, 0.0, 0.0});
  CHECK(m.accuracy == 50.0);
}

TEST_CASE("compute_metrics errors") {
  CHECK(code_of([] { compute_metrics(std::vector<int>{1}, std::vector<int>{1, 0}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { compute_metrics(std::vector<int>{}, std::vector<int>{}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([] { compute_metrics(std::vector<int>{2}, std::vector<int>{1}); }) == ErrorCode::ValidationError);
}

TEST_CASE("metric invariants on random predictions") {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(200));
    std::vector<int> pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.bernoulli(0.5) ? 1 : 0;
      truth[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    const Metrics m = compute_metrics(pred, truth);
    for (const ClassMetrics* c : {&m.positive, &m.negative, &m.macro, &m.micro}) {
      REQUIRE(c->precision >= 0.0);
      REQUIRE(c->precision <= 1.0);
      REQUIRE(c->recall >= 0.0);
      REQUIRE(c->recall <= 1.0);
    }
    REQUIRE(m.positive.f_measure == doctest::Approx(f_measure(m.positive.precision, m.positive.recall)));
    REQUIRE(m.accuracy == doctest::Approx(100.0 * m.confusion.trace() / m.confusion.total()));
    REQUIRE(m.confusion.total() == n);

    // Swapping class names swaps the per-class rows and leaves averages alone.
    std::vector<int> pred_s(pred.size()), truth_s(truth.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred_s[i] = 1 - pred[i];
      truth_s[i] = 1 - truth[i];
    }
    const Metrics s = compute_metrics(pred_s, truth_s);
    REQUIRE(s.positive == m.negative);
    REQUIRE(s.negative == m.positive);
    REQUIRE(s.macro.f_measure == doctest::Approx(m.macro.f_measure));
    REQUIRE(s.accuracy == m.accuracy);
  }
}

TEST_CASE("modality set parsing and canonical names") {
  CHECK(ModalitySet::parse("T+V+A").to_string() == "A+V+T");
  CHECK(ModalitySet::parse("VT").to_string() == "V+T");
  CHECK(ModalitySet::parse("T").is_singleton());
  CHECK(code_of([] { ModalitySet::parse("A+X"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { ModalitySet::parse(""); }) == ErrorCode::ConfigError);
  std::vector<std::string> names;
  for (const auto& s : table_order()) names.push_back(s.to_string());
  CHECK(names == std::vector<std::string>{"A+V", "V+T", "A+T", "A+V+T", "T", "A", "V"});
}

TEST_CASE("single-configuration text table") {
  EvaluationReport r;
  auto [pred, truth] = from_counts(47, 3, 8, 42);
  r.entries.push_back({make_configuration(ModalitySet{Modality::text}, FusionStrategy::early),
                       compute_metrics(pred, truth)});
  const std::string text = render_report(r, ReportFormat::text_table);
  CHECK(text.find("text-based unimodal") != std::string::npos);
  CHECK(text.find("Positive") != std::string::npos);
  CHECK(text.find("Negative") != std::string::npos);
  CHECK(text.find("Average") != std::string::npos);
  CHECK(text.find("89.00") != std::string::npos);
  CHECK(text.find("A+V") == std::string::npos);
}

TEST_CASE("fusion table follows the published row order") {
  const std::string text = render_report(sample_report(), ReportFormat::text_table);
  std::size_t at = 0;
  for (const char* row : {"A+V ", "V+T ", "A+T ", "A+V+T ", "T-Only", "A-Only", "V-Only"}) {
    const std::size_t pos = text.find(row, at);
    REQUIRE_MESSAGE(pos != std::string::npos, row);
    at = pos;
  }
  CHECK(text.find("Early (feature-level) fusion") != std::string::npos);
  CHECK(render_report(sample_report(), ReportFormat::text_table) == text);
}

TEST_CASE("every rendered F cell is consistent with the unrounded metrics") {
  const EvaluationReport r = sample_report();
  for (const auto& e : r.entries) {
    const auto& c = e.metrics.confusion.counts;
    const double p = static_cast<double>(c[1][1]) / static_cast<double>(c[1][1] + c[0][1]);
    const double rc = static_cast<double>(c[1][1]) / static_cast<double>(c[1][1] + c[1][0]);
    CHECK(e.metrics.positive.f_measure == doctest::Approx(2 * p * rc / (p + rc)));
  }
}

TEST_CASE("json render round-trips") {
  const EvaluationReport r = sample_report();
  const std::string doc = render_report(r, ReportFormat::json);
  const EvaluationReport back = report_from_json(nlohmann::json::parse(doc));
  CHECK(back == r);
  CHECK(render_report(back, ReportFormat::json) == doc);
}

TEST_CASE("requested configuration missing from the report") {
  const EvaluationReport r = sample_report();
  const Configuration late_avt{ModalitySet::parse("A+V+T"), FusionStrategy::late};
  CHECK(code_of([&] { render_report(r, ReportFormat::json, {late_avt}); }) == ErrorCode::IncompleteReport);
  const Configuration early_avt{ModalitySet::parse("A+V+T"), FusionStrategy::early};
  CHECK_NOTHROW(render_report(r, ReportFormat::json, {early_avt}));
  EvaluationReport empty_entry = r;
  empty_entry.entries.front().metrics.confusion = {};
  CHECK(code_of([&] { render_report(empty_entry, ReportFormat::text_table); }) == ErrorCode::IncompleteReport);
}
