#include "polyfuse/corpus/statistics.hpp"

#include <iomanip>
#include <set>
#include <sstream>

namespace polyfuse::corpus {

StatisticsReport compute_statistics(const CorpusManifest& manifest) {
  StatisticsReport r;
  r.videos = manifest.videos.size();
  r.utterances = manifest.utterances.size();
  std::set<std::string> speakers;
  for (const auto& v : manifest.videos) speakers.insert(v.speaker_id);
  r.speakers = speakers.size();

  std::set<std::string> words;
  for (const auto& u : manifest.utterances) words.insert(u.tokens.begin(), u.tokens.end());
  r.unique_words = words.size();

  for (const auto& [uid, label] : manifest.resolved_labels) {
    if (!label.subjectivity) {
      ++r.unresolved;
      continue;
    }
    if (*label.subjectivity == Subjectivity::objective) {
      ++r.objective;
      continue;
    }
    ++r.subjective;
    if (!label.polarity) continue;
    if (*label.polarity > 0) ++r.positive;
    else if (*label.polarity < 0) ++r.negative;
    else ++r.neutral;
  }
  return r;
}

std::string render_statistics(const StatisticsReport& r) {
  const std::pair<const char*, std::size_t> rows[] = {
      {"Total number of positive segmented", r.positive},
      {"Total number of negative segmented", r.negative},
      {"Total number of subjective", r.subjective},
      {"Total number of objective", r.objective},
      {"Total number of unique words in the dataset", r.unique_words},
      {"Total number of speakers", r.speakers},
  };
  std::ostringstream os;
  const std::string rule = "+" + std::string(46, '-') + "+" + std::string(10, '-') + "+\n";
  os << rule;
  for (const auto& [name, value] : rows)
    os << "| " << std::left << std::setw(44) << name << " | " << std::right << std::setw(8) << value << " |\n" << rule;
  return os.str();
}

nlohmann::json to_json(const StatisticsReport& r) {
  return {{"positive", r.positive},         {"negative", r.negative},     {"neutral", r.neutral},
          {"subjective", r.subjective},     {"objective", r.objective},   {"unresolved", r.unresolved},
          {"unique_words", r.unique_words}, {"speakers", r.speakers},     {"videos", r.videos},
          {"utterances", r.utterances}};
}

}  // namespace polyfuse::corpus
