#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/eval/metrics.hpp"
#include "polyfuse/fusion/modality.hpp"

namespace polyfuse::eval {

enum class FusionStrategy { unimodal, early, late };

std::string_view to_string(FusionStrategy s) noexcept;
FusionStrategy parse_fusion_strategy(std::string_view s);

struct Configuration {
  ModalitySet modalities;
  FusionStrategy strategy = FusionStrategy::unimodal;

  std::string label() const;  // "early A+V+T", "unimodal T"
  auto operator<=>(const Configuration&) const = default;
};

/// Unimodal for singleton sets, otherwise the given fusion strategy.
Configuration make_configuration(ModalitySet set, FusionStrategy multimodal_strategy);

struct ReportEntry {
  Configuration configuration;
  Metrics metrics;
  bool operator==(const ReportEntry&) const = default;
};

struct EvaluationReport {
  static constexpr int kSchemaVersion = 1;

  std::vector<ReportEntry> entries;
  std::string split_fingerprint;
  nlohmann::json seeds = nlohmann::json::object();

  const ReportEntry* find(const Configuration& c) const;
  bool operator==(const EvaluationReport&) const = default;
};

enum class ReportFormat { text_table, json };

ReportFormat parse_report_format(std::string_view s);

/// Renders the report. Throws IncompleteReport if any requested configuration
/// is absent or an entry has an empty confusion matrix.
std::string render_report(const EvaluationReport& report, ReportFormat format,
                          const std::vector<Configuration>& requested = {});

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

}  // namespace polyfuse::eval
