#include "polyfuse/corpus/agreement.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "polyfuse/core/error.hpp"

namespace polyfuse::corpus {

namespace {

bool agree(const AnnotationRecord& a, const AnnotationRecord& b, AgreementFacet facet) {
  switch (facet) {
    case AgreementFacet::polarity: return a.effective_polarity() == b.effective_polarity();
    case AgreementFacet::subjectivity: return a.subjectivity == b.subjectivity;
    case AgreementFacet::gestures: return a.gestures == b.gestures;
  }
  return false;
}

}  // namespace

double compute_agreement(std::span<const AnnotationRecord> annotations, AgreementFacet facet) {
  std::map<std::string, std::vector<const AnnotationRecord*>> by_utt;
  for (const auto& a : annotations) by_utt[a.utterance_id].push_back(&a);

  double sum = 0.0;
  std::size_t items = 0;
  for (const auto& [uid, recs] : by_utt) {
    if (recs.size() < 2) continue;
    std::size_t pairs = 0, agreeing = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      for (std::size_t j = i + 1; j < recs.size(); ++j) {
        ++pairs;
        if (agree(*recs[i], *recs[j], facet)) ++agreeing;
      }
    }
    sum += static_cast<double>(agreeing) / static_cast<double>(pairs);
    ++items;
  }
  if (items == 0) throw Error(ErrorCode::InsufficientOverlap, "no utterance has two or more annotations");
  return 100.0 * sum / static_cast<double>(items);
}

std::string format_percentage(double value) {
  const double rounded = std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", rounded);
  return buf;
}

}  // namespace polyfuse::corpus
