#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::corpus {

struct StatisticsReport {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t neutral = 0;
  std::size_t subjective = 0;
  std::size_t objective = 0;
  std::size_t unresolved = 0;
  std::size_t unique_words = 0;
  std::size_t speakers = 0;
  std::size_t videos = 0;
  std::size_t utterances = 0;
  bool operator==(const StatisticsReport&) const = default;
};

StatisticsReport compute_statistics(const CorpusManifest& manifest);

/// Plain-text table with the dataset-statistics row set.
std::string render_statistics(const StatisticsReport& report);
nlohmann::json to_json(const StatisticsReport& report);

}  // namespace polyfuse::corpus
