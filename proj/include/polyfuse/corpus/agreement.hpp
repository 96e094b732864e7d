#pragma once

#include <span>
#include <string>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::corpus {

enum class AgreementFacet { polarity, subjectivity, gestures };

/// Pairwise percent agreement: for every utterance with at least two records,
/// the fraction of annotator pairs that agree on the facet; averaged over those
/// utterances and scaled to [0, 100]. Gesture pairs agree iff the sets are equal.
/// Throws InsufficientOverlap when no utterance has two records.
double compute_agreement(std::span<const AnnotationRecord> annotations, AgreementFacet facet);

/// "89.23%" style rendering, two decimals rounded half-up.
std::string format_percentage(double value);

}  // namespace polyfuse::corpus
