#include "polyfuse/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "polyfuse/core/error.hpp"

namespace polyfuse::eval {

std::string_view to_string(FusionStrategy s) noexcept {
  switch (s) {
    case FusionStrategy::unimodal: return "unimodal";
    case FusionStrategy::early: return "early";
    case FusionStrategy::late: return "late";
  }
  return "";
}

FusionStrategy parse_fusion_strategy(std::string_view s) {
  if (s == "unimodal") return FusionStrategy::unimodal;
  if (s == "early") return FusionStrategy::early;
  if (s == "late") return FusionStrategy::late;
  throw Error(ErrorCode::ConfigError, "unknown fusion strategy '" + std::string(s) + "'");
}

std::string Configuration::label() const {
  return std::string(to_string(strategy)) + " " + modalities.to_string();
}

Configuration make_configuration(ModalitySet set, FusionStrategy multimodal_strategy) {
  return {set, set.is_singleton() ? FusionStrategy::unimodal : multimodal_strategy};
}

const ReportEntry* EvaluationReport::find(const Configuration& c) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const ReportEntry& e) { return e.configuration == c; });
  return it == entries.end() ? nullptr : &*it;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "text" || s == "text_table") return ReportFormat::text_table;
  if (s == "json") return ReportFormat::json;
  throw Error(ErrorCode::ConfigError, "unknown report format '" + std::string(s) + "'");
}

namespace {

nlohmann::json class_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f_measure", m.f_measure}};
}

ClassMetrics class_from_json(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f_measure").get<double>()};
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(v, 2));
  return buf;
}

std::string pad(std::string_view s, std::size_t width) {
  std::string out(s);
  if (out.size() < width) out.append(width - out.size(), ' ');
  return out;
}

std::string lpad(std::string_view s, std::size_t width) {
  std::string out;
  if (s.size() < width) out.append(width - s.size(), ' ');
  out += s;
  return out;
}

constexpr std::size_t kNameWidth = 10;
constexpr std::size_t kRowWidth = 10;
constexpr std::size_t kCellWidth = 11;

std::string header_line() {
  return pad("", kNameWidth) + pad("", kRowWidth) + lpad("Precision", kCellWidth) + lpad("Recall", kCellWidth) +
         lpad("F-measure", kCellWidth) + lpad("Accuracy", kCellWidth) + "\n";
}

std::string metric_row(std::string_view name, std::string_view row, const ClassMetrics& m,
                       const std::optional<double>& accuracy) {
  return pad(name, kNameWidth) + pad(row, kRowWidth) + lpad(fixed2(m.precision), kCellWidth) +
         lpad(fixed2(m.recall), kCellWidth) + lpad(fixed2(m.f_measure), kCellWidth) +
         lpad(accuracy ? fixed2(*accuracy) : "", kCellWidth) + "\n";
}

std::string block_name(const Configuration& c) {
  return c.modalities.is_singleton() ? c.modalities.to_string() + "-Only" : c.modalities.to_string();
}

// Positive, Negative, Average and Micro rows for one configuration; accuracy
// sits on the Average row.
std::string entry_block(const ReportEntry& e) {
  const std::string name = block_name(e.configuration);
  const Metrics& m = e.metrics;
  std::string out;
  out += metric_row(name, "Positive", m.positive, std::nullopt);
  out += metric_row("", "Negative", m.negative, std::nullopt);
  out += metric_row("", "Average", m.macro, m.accuracy);
  out += metric_row("", "Micro", m.micro, std::nullopt);
  return out;
}

std::string strategy_title(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::unimodal: return "Unimodal";
    case FusionStrategy::early: return "Early (feature-level) fusion";
    case FusionStrategy::late: return "Late (decision-level) fusion";
  }
  return "";
}

void check_complete(const EvaluationReport& report, const std::vector<Configuration>& requested) {
  for (const Configuration& c : requested)
    if (report.find(c) == nullptr) throw Error(ErrorCode::IncompleteReport, "report has no entry for " + c.label());
  for (const ReportEntry& e : report.entries)
    if (e.metrics.confusion.total() == 0)
      throw Error(ErrorCode::IncompleteReport, "entry " + e.configuration.label() + " has no evaluated utterances");
}

// Table rank of a configuration within one table: the fixed row order, then
// anything else after it in canonical order.
int row_rank(const ModalitySet& set) {
  const auto& order = table_order();
  auto it = std::find(order.begin(), order.end(), set);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

std::string render_text(const EvaluationReport& report) {
  std::vector<const ReportEntry*> unimodal;
  std::map<FusionStrategy, std::vector<const ReportEntry*>> fused;
  for (const ReportEntry& e : report.entries) {
    if (e.configuration.strategy == FusionStrategy::unimodal)
      unimodal.push_back(&e);
    else
      fused[e.configuration.strategy].push_back(&e);
  }
  auto by_rank = [](const ReportEntry* a, const ReportEntry* b) {
    return std::pair(row_rank(a->configuration.modalities), a->configuration.modalities) <
           std::pair(row_rank(b->configuration.modalities), b->configuration.modalities);
  };
  std::sort(unimodal.begin(), unimodal.end(), by_rank);

  std::string out;
  if (!report.split_fingerprint.empty()) out += "split " + report.split_fingerprint + "\n\n";
  if (fused.empty()) {
    for (const ReportEntry* e : unimodal) {
      out += std::string(name(e->configuration.modalities.members().front())) + "-based unimodal\n";
      out += header_line();
      out += entry_block(*e);
      out += "\n";
    }
    return out;
  }
  for (auto& [strategy, entries] : fused) {
    std::sort(entries.begin(), entries.end(), by_rank);
    out += strategy_title(strategy) + "\n";
    out += header_line();
    for (const ReportEntry* e : entries) out += entry_block(*e);
    for (const ReportEntry* e : unimodal) {
      const Metrics& m = e->metrics;
      out += metric_row(block_name(e->configuration), "Average", m.macro, m.accuracy);
    }
    out += "\n";
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const ReportEntry& e : report.entries) {
    const Metrics& m = e.metrics;
    const auto& c = m.confusion.counts;
    entries.push_back({{"modality_set", e.configuration.modalities.to_string()},
                       {"fusion", to_string(e.configuration.strategy)},
                       {"confusion", {{c[0][0], c[0][1]}, {c[1][0], c[1][1]}}},
                       {"positive", class_json(m.positive)},
                       {"negative", class_json(m.negative)},
                       {"macro", class_json(m.macro)},
                       {"micro", class_json(m.micro)},
                       {"accuracy", m.accuracy}});
  }
  return {{"schema_version", EvaluationReport::kSchemaVersion},
          {"split_fingerprint", report.split_fingerprint},
          {"seeds", report.seeds},
          {"entries", std::move(entries)}};
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != EvaluationReport::kSchemaVersion)
      throw Error(ErrorCode::ValidationError, "unsupported report schema version");
    EvaluationReport report;
    report.split_fingerprint = j.at("split_fingerprint").get<std::string>();
    report.seeds = j.at("seeds");
    for (const auto& e : j.at("entries")) {
      ReportEntry entry;
      entry.configuration = {ModalitySet::parse(e.at("modality_set").get<std::string>()),
                             parse_fusion_strategy(e.at("fusion").get<std::string>())};
      const auto& c = e.at("confusion");
      for (int t = 0; t < 2; ++t)
        for (int p = 0; p < 2; ++p) entry.metrics.confusion.counts[t][p] = c.at(t).at(p).get<std::int64_t>();
      entry.metrics.positive = class_from_json(e.at("positive"));
      entry.metrics.negative = class_from_json(e.at("negative"));
      entry.metrics.macro = class_from_json(e.at("macro"));
      entry.metrics.micro = class_from_json(e.at("micro"));
      entry.metrics.accuracy = e.at("accuracy").get<double>();
      report.entries.push_back(std::move(entry));
    }
    return report;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ValidationError, std::string("malformed report: ") + ex.what());
  }
}

std::string render_report(const EvaluationReport& report, ReportFormat format,
                          const std::vector<Configuration>& requested) {
  check_complete(report, requested);
  if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";
  return render_text(report);
}

}  // namespace polyfuse::eval
