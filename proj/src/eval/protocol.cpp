#include "polyfuse/eval/protocol.hpp"

#include <algorithm>
#include <set>

#include "polyfuse/audio/functionals.hpp"
#include "polyfuse/audio/pipeline.hpp"
#include "polyfuse/core/error.hpp"
#include "polyfuse/core/hash.hpp"
#include "polyfuse/corpus/labels.hpp"
#include "polyfuse/nn/artifact.hpp"
#include "polyfuse/nn/weights.hpp"

namespace polyfuse::eval {

namespace fs = std::filesystem;
using corpus::Split;

ModelSettings::ModelSettings() : audio(audio::audio_model_config()), early(fusion::EarlyFusionModel::default_head()) {}

nlohmann::json ModelSettings::to_json() const {
  return {{"text", text.to_json()},           {"audio", audio.to_json()},
          {"visual", visual.to_json()},       {"early", early.to_json()},
          {"late", late.to_json()},           {"train", nn::to_json(train)},
          {"visual_micro_batch", visual_micro_batch}};
}

ModelSettings ModelSettings::from_json(const nlohmann::json& j) {
  ModelSettings s;
  if (j.contains("text")) s.text = text::TextModelConfig::from_json(j.at("text"));
  if (j.contains("audio")) s.audio = nn::MlpClassifierConfig::from_json(j.at("audio"));
  if (j.contains("visual")) s.visual = visual::VisualModelConfig::from_json(j.at("visual"));
  if (j.contains("early")) s.early = nn::MlpClassifierConfig::from_json(j.at("early"));
  if (j.contains("late")) s.late = fusion::MetaConfig::from_json(j.at("late"));
  if (j.contains("train")) s.train = nn::train_config_from_json(j.at("train"));
  s.visual_micro_batch = j.value("visual_micro_batch", s.visual_micro_batch);
  return s;
}

std::vector<Configuration> table_configurations(FusionStrategy strategy) {
  std::vector<Configuration> out;
  for (const char* s : {"T", "A", "V"}) out.push_back(make_configuration(ModalitySet::parse(s), strategy));
  for (const char* s : {"A+V", "V+T", "A+T", "A+V+T"})
    out.push_back(make_configuration(ModalitySet::parse(s), strategy));
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& name) {
  const std::string digest = sha256_hex(std::to_string(base) + "/" + name);
  return std::stoull(digest.substr(0, 15), nullptr, 16);
}

std::string artifact_name(const Configuration& c) {
  return std::string(to_string(c.strategy)) + "_" + c.modalities.to_string();
}

namespace {

Configuration unimodal(Modality m) { return {ModalitySet{m}, FusionStrategy::unimodal}; }

/// Features and labels of one split, in utterance-id order.
struct SplitData {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<text::TextTensor> text;
  nn::Mat<float> audio;  // speaker z-standardized functionals
  std::vector<visual::FrameTensor> visual;
};

struct Corpus {
  SplitData parts[3];
  std::string fingerprint;
  nlohmann::json pipeline_versions = nlohmann::json::object();

  SplitData& operator[](Split s) { return parts[static_cast<int>(s)]; }
};

std::set<Modality> modalities_of(const std::vector<Configuration>& configs) {
  std::set<Modality> out;
  for (const auto& c : configs)
    for (Modality m : c.modalities.members()) out.insert(m);
  return out;
}

/// Modalities that need a trained unimodal classifier.
std::set<Modality> unimodal_models_needed(const std::vector<Configuration>& configs) {
  std::set<Modality> out;
  for (const auto& c : configs)
    for (Modality m : c.modalities.members())
      if (c.strategy != FusionStrategy::early || m != Modality::audio) out.insert(m);
  return out;
}

Corpus load_corpus(const corpus::CorpusManifest& manifest, const corpus::SplitAssignment& split,
                   const std::set<Modality>& modalities, const pipeline::FeatureCache& cache) {
  corpus::check_speaker_exclusive(manifest, split);
  const corpus::CorpusManifest labelled =
      manifest.resolved_labels.empty() ? corpus::resolve_labels(manifest) : manifest;
  Corpus c;
  c.fingerprint = split.fingerprint();
  for (Modality m : modalities) c.pipeline_versions[std::string(name(m))] = cache.version(m);

  audio::VectorMap raw_audio;
  audio::SpeakerMap speakers;
  for (Split s : {Split::train, Split::validation, Split::test}) {
    SplitData& d = c[s];
    for (const std::string& id : split.members(s)) {
      const auto it = labelled.resolved_labels.find(id);
      if (it == labelled.resolved_labels.end() || !it->second.trainable()) continue;
      d.ids.push_back(id);
      d.labels.push_back(*it->second.polarity > 0 ? 1 : 0);
    }
    if (d.ids.empty())
      throw Error(ErrorCode::EmptyInput, std::string("the ") + std::string(corpus::to_string(s)) +
                                             " split has no positive or negative utterances");
    for (const std::string& id : d.ids) {
      if (modalities.contains(Modality::text)) {
        nlohmann::json meta;
        const Tensor t = cache.load(Modality::text, id, &meta);
        nn::Mat<float> values = Eigen::Map<const nn::Mat<float>>(t.data.data(), t.shape.at(0), t.shape.at(1));
        d.text.push_back(text::text_tensor_from_values(std::move(values), meta.at("length").get<int>()));
      }
      if (modalities.contains(Modality::audio)) {
        const Tensor t = cache.load(Modality::audio, id);
        raw_audio[id] = std::vector<double>(t.data.begin(), t.data.end());
        speakers[id] = manifest.speaker_of(id);
      }
      if (modalities.contains(Modality::visual)) {
        const Tensor t = cache.load(Modality::visual, id);
        visual::FrameTensor f;
        f.geometry = {static_cast<int>(t.shape.at(0)), static_cast<int>(t.shape.at(1)), static_cast<int>(t.shape.at(2))};
        f.values = t.data;
        d.visual.push_back(std::move(f));
      }
    }
  }
  if (modalities.contains(Modality::audio)) {
    // Each speaker is normalized by its own utterances; speakers never span splits.
    const audio::VectorMap z = audio::speaker_zstandardize(raw_audio, speakers);
    for (auto& d : c.parts) {
      const auto dim = static_cast<Eigen::Index>(z.begin()->second.size());
      d.audio.resize(static_cast<Eigen::Index>(d.ids.size()), dim);
      for (std::size_t i = 0; i < d.ids.size(); ++i) {
        const auto& v = z.at(d.ids[i]);
        for (Eigen::Index k = 0; k < dim; ++k) d.audio(static_cast<Eigen::Index>(i), k) = static_cast<float>(v[static_cast<std::size_t>(k)]);
      }
    }
  }
  return c;
}

/// Trained unimodal classifiers with uniform access.
struct Unimodal {
  std::optional<text::TextClassifier> text;
  std::optional<nn::MlpClassifier> audio;
  std::optional<visual::VisualClassifier> visual;

  std::vector<ProbabilityPair> predict(Modality m, const SplitData& d) {
    switch (m) {
      case Modality::text:
        return text->predict(d.text);
      case Modality::audio:
        return audio->predict(d.audio);
      case Modality::visual:
        return visual->predict(d.visual);
    }
    return {};
  }

  /// Early-fusion representation of each modality.
  nn::Mat<float> representation(Modality m, const SplitData& d) {
    switch (m) {
      case Modality::text:
        return text->penultimate(d.text);
      case Modality::audio:
        return d.audio;
      case Modality::visual:
        return visual->penultimate(d.visual);
    }
    return {};
  }
};

fusion::FeatureMatrices representations(Unimodal& models, ModalitySet set, const SplitData& d) {
  fusion::FeatureMatrices out;
  for (Modality m : set.members()) out[m] = models.representation(m, d);
  return out;
}

fusion::PredictionLists predictions(Unimodal& models, ModalitySet set, const SplitData& d) {
  fusion::PredictionLists out;
  for (Modality m : set.members()) out[m] = models.predict(m, d);
  return out;
}

Metrics score(const std::vector<ProbabilityPair>& p, const std::vector<int>& truth) {
  return compute_metrics(labels_of(p), truth);
}

Metrics score(const std::vector<fusion::FusedPrediction>& p, const std::vector<int>& truth) {
  std::vector<int> labels;
  for (const auto& x : p) labels.push_back(x.probabilities.label());
  return compute_metrics(labels, truth);
}

void say(const ProtocolOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

}  // namespace

EvaluationReport run_protocol(const corpus::CorpusManifest& manifest, const corpus::SplitAssignment& split,
                              const std::vector<Configuration>& configurations, const pipeline::FeatureCache& cache,
                              const ModelSettings& settings, const ProtocolOptions& options) {
  Corpus data = load_corpus(manifest, split, modalities_of(configurations), cache);
  SplitData& train = data[Split::train];
  SplitData& val = data[Split::validation];
  SplitData& test = data[Split::test];

  EvaluationReport report;
  report.split_fingerprint = data.fingerprint;
  report.seeds["base"] = options.seed;
  const nlohmann::json extra{{"base_seed", options.seed},
                             {"split_fingerprint", data.fingerprint},
                             {"pipeline_versions", data.pipeline_versions}};
  auto artifact_dir = [&](const Configuration& c) { return *options.artifacts_dir / artifact_name(c); };
  auto with_set = [&](const Configuration& c) {
    nlohmann::json e = extra;
    e["modality_set"] = c.modalities.to_string();
    return e;
  };

  Unimodal models;
  for (Modality m : unimodal_models_needed(configurations)) {
    const Configuration c = unimodal(m);
    const std::uint64_t seed = derive_seed(options.seed, c.label());
    report.seeds[c.label()] = seed;
    say(options, "training " + c.label() + " on " + std::to_string(train.ids.size()) + " utterances");
    switch (m) {
      case Modality::text:
        models.text.emplace(settings.text);
        models.text->train(train.text, train.labels, val.text, val.labels, settings.train, seed);
        if (options.artifacts_dir) models.text->save(artifact_dir(c), with_set(c));
        break;
      case Modality::audio:
        models.audio.emplace("audio", settings.audio, train.audio.cols());
        models.audio->train(train.audio, train.labels, val.audio, val.labels, settings.train, seed);
        if (options.artifacts_dir) models.audio->save(artifact_dir(c), with_set(c));
        break;
      case Modality::visual: {
        visual::VisualModelConfig vc = settings.visual;
        vc.input = cache.settings().visual;
        models.visual.emplace(vc);
        models.visual->train(train.visual, train.labels, val.visual, val.labels, settings.train, seed,
                             settings.visual_micro_batch);
        if (options.artifacts_dir) models.visual->save(artifact_dir(c), with_set(c));
        break;
      }
    }
  }

  for (const Configuration& c : configurations) {
    ReportEntry entry{c, {}};
    switch (c.strategy) {
      case FusionStrategy::unimodal:
        entry.metrics = score(models.predict(c.modalities.members().front(), test), test.labels);
        break;
      case FusionStrategy::early: {
        const std::uint64_t seed = derive_seed(options.seed, c.label());
        report.seeds[c.label()] = seed;
        say(options, "training " + c.label());
        const fusion::FeatureMatrices tr = representations(models, c.modalities, train);
        fusion::BlockDims dims;
        for (const auto& [m, x] : tr) dims[m] = x.cols();
        fusion::EarlyFusionModel early(c.modalities, dims, settings.early);
        early.train(tr, train.labels, representations(models, c.modalities, val), val.labels, settings.train, seed);
        if (options.artifacts_dir) early.save(artifact_dir(c), with_set(c));
        entry.metrics = score(early.predict(representations(models, c.modalities, test)), test.labels);
        break;
      }
      case FusionStrategy::late: {
        say(options, "training " + c.label());
        fusion::LateFusionModel late(c.modalities, settings.late);
        late.train(predictions(models, c.modalities, val), val.labels);
        if (options.artifacts_dir) late.save(artifact_dir(c), with_set(c));
        entry.metrics = score(late.predict(predictions(models, c.modalities, test)), test.labels);
        break;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

EvaluationReport evaluate_artifacts(const corpus::CorpusManifest& manifest, const corpus::SplitAssignment& split,
                                    const std::vector<Configuration>& configurations,
                                    const pipeline::FeatureCache& cache, const fs::path& artifacts_dir) {
  Corpus data = load_corpus(manifest, split, modalities_of(configurations), cache);
  SplitData& test = data[Split::test];
  EvaluationReport report;
  report.split_fingerprint = data.fingerprint;

  auto check_manifest = [&](const fs::path& dir, const Configuration& c) {
    const nlohmann::json m = nn::read_artifact_manifest(dir, "");
    if (m.value("split_fingerprint", "") != data.fingerprint)
      throw Error(ErrorCode::ValidationError, c.label() + " was trained on a different split", dir.string());
    report.seeds["base"] = m.at("base_seed");
    if (m.contains("seed") && c.strategy != FusionStrategy::late) report.seeds[c.label()] = m.at("seed");
  };

  Unimodal models;
  for (Modality m : unimodal_models_needed(configurations)) {
    const Configuration c = unimodal(m);
    const fs::path dir = artifacts_dir / artifact_name(c);
    check_manifest(dir, c);
    switch (m) {
      case Modality::text:
        models.text.emplace(text::TextClassifier::load(dir));
        break;
      case Modality::audio:
        models.audio.emplace(nn::MlpClassifier::load(dir, "audio"));
        break;
      case Modality::visual:
        models.visual.emplace(visual::VisualClassifier::load(dir));
        break;
    }
  }
  for (const Configuration& c : configurations) {
    ReportEntry entry{c, {}};
    const fs::path dir = artifacts_dir / artifact_name(c);
    switch (c.strategy) {
      case FusionStrategy::unimodal:
        entry.metrics = score(models.predict(c.modalities.members().front(), test), test.labels);
        break;
      case FusionStrategy::early: {
        check_manifest(dir, c);
        const auto early = fusion::EarlyFusionModel::load(dir);
        entry.metrics = score(early.predict(representations(models, c.modalities, test)), test.labels);
        break;
      }
      case FusionStrategy::late: {
        check_manifest(dir, c);
        const auto late = fusion::LateFusionModel::load(dir);
        entry.metrics = score(late.predict(predictions(models, c.modalities, test)), test.labels);
        break;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace polyfuse::eval
