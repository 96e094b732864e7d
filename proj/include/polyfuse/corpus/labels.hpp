#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyfuse/corpus/types.hpp"

namespace polyfuse::corpus {

enum class ResolutionPolicy { majority_discard_ties };

/// Resolves subjectivity and polarity by strict majority. Subjectivity is voted
/// over all records; polarity over the records that judged the utterance
/// subjective. Utterances without a strict majority get an empty field.
/// `required` lists utterances that must carry annotations (NoAnnotations otherwise).
CorpusManifest resolve_labels(const CorpusManifest& manifest,
                              ResolutionPolicy policy = ResolutionPolicy::majority_discard_ties,
                              const std::optional<std::vector<std::string>>& required = std::nullopt);

/// Keeps utterances resolved as subjective, with their annotations and labels.
CorpusManifest filter_subjective(const CorpusManifest& manifest);

/// Keeps utterances usable for binary training: subjective with polarity +1 or -1.
CorpusManifest filter_trainable(const CorpusManifest& manifest);

}  // namespace polyfuse::corpus
