#include "polyfuse/visual/visual_model.hpp"

#include "polyfuse/core/error.hpp"
#include "polyfuse/nn/artifact.hpp"
#include "polyfuse/nn/weights.hpp"

namespace polyfuse::visual {

std::vector<FeatureLayer> VisualModelConfig::default_features() {
  return {ConvSpec{16}, ConvSpec{32}, PoolSpec{{1, 2, 2}}, ConvSpec{64},
          PoolSpec{{2, 2, 2}}, ConvSpec{64}, PoolSpec{{1, 2, 2}}};
}

VisualModelConfig VisualModelConfig::scaled(ClipGeometry input, int factor) {
  VisualModelConfig c;
  c.input = input;
  for (auto& layer : c.features)
    if (auto* conv = std::get_if<ConvSpec>(&layer)) conv->filters = std::max(1, conv->filters / factor);
  for (int& d : c.dense) d = std::max(1, d / factor);
  return c;
}

nlohmann::json VisualModelConfig::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : features) {
    if (const auto* c = std::get_if<ConvSpec>(&l))
      layers.push_back({{"type", "conv3d"}, {"filters", c->filters}, {"kernel", c->kernel}, {"padding", "valid"},
                        {"stride", 1}});
    else
      layers.push_back({{"type", "maxpool3d"}, {"window", std::get<PoolSpec>(l).window}});
  }
  return {{"input", {input.frames, input.height, input.width, 3}},
          {"features", layers},
          {"dense", dense},
          {"dropout", dropout}};
}

VisualModelConfig VisualModelConfig::from_json(const nlohmann::json& j) {
  VisualModelConfig c;
  if (j.contains("input")) {
    const auto& in = j.at("input");
    c.input = {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
  }
  if (j.contains("features")) {
    c.features.clear();
    for (const auto& l : j.at("features")) {
      const std::string type = l.at("type").get<std::string>();
      if (type == "conv3d")
        c.features.push_back(ConvSpec{l.at("filters").get<int>(), l.at("kernel").get<nn::Extent3>()});
      else if (type == "maxpool3d")
        c.features.push_back(PoolSpec{l.at("window").get<nn::Extent3>()});
      else
        throw Error(ErrorCode::ConfigError, "unknown visual layer type '" + type + "'");
    }
  }
  c.dense = j.value("dense", c.dense);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

std::vector<nn::VolumeShape> feature_shapes(const VisualModelConfig& config) {
  nn::VolumeShape s{3, config.input.frames, config.input.height, config.input.width};
  std::vector<nn::VolumeShape> out;
  auto describe = [](const nn::VolumeShape& v) {
    return "(" + std::to_string(v.time) + ", " + std::to_string(v.height) + ", " + std::to_string(v.width) + ")";
  };
  for (std::size_t i = 0; i < config.features.size(); ++i) {
    const auto& layer = config.features[i];
    const nn::Extent3 extent =
        std::holds_alternative<ConvSpec>(layer) ? std::get<ConvSpec>(layer).kernel : std::get<PoolSpec>(layer).window;
    if (s.time < extent[0] || s.height < extent[1] || s.width < extent[2])
      throw Error(ErrorCode::ShapeUnderflow, "layer " + std::to_string(i + 1) + " needs at least (" +
                                                 std::to_string(extent[0]) + ", " + std::to_string(extent[1]) + ", " +
                                                 std::to_string(extent[2]) + ") but receives " + describe(s));
    if (const auto* c = std::get_if<ConvSpec>(&layer))
      s = nn::conv_output_shape(s, c->filters, c->kernel);
    else
      s = nn::pool_output_shape(s, extent);
    out.push_back(s);
  }
  return out;
}

namespace {

constexpr std::size_t kInferenceBatch = 16;

void check_geometry(const FrameTensor& t, const ClipGeometry& g) {
  if (t.geometry != g || t.values.size() != static_cast<std::size_t>(g.frames) * g.height * g.width * 3)
    throw Error(ErrorCode::ShapeMismatch,
                "clip is " + std::to_string(t.geometry.frames) + "x" + std::to_string(t.geometry.height) + "x" +
                    std::to_string(t.geometry.width) + ", model expects " + std::to_string(g.frames) + "x" +
                    std::to_string(g.height) + "x" + std::to_string(g.width));
}

}  // namespace

VisualClassifier::VisualClassifier(VisualModelConfig config) : net_(config) {
  Rng rng(0);
  net_.init(rng);
}

nn::TrainingLog VisualClassifier::train(std::span<const FrameTensor> train, std::span<const int> labels,
                                        std::span<const FrameTensor> validation,
                                        std::span<const int> validation_labels, const nn::TrainConfig& train_config,
                                        std::uint64_t seed, std::size_t micro_batch) {
  if (train.size() != labels.size() || validation.size() != validation_labels.size())
    throw Error(ErrorCode::LengthMismatch, "visual inputs and labels differ in length");
  for (const auto& t : train) check_geometry(t, net_.config().input);
  for (const auto& t : validation) check_geometry(t, net_.config().input);
  nn::require_two_classes(labels);
  std::vector<nn::Volume<float>> volumes;
  volumes.reserve(train.size());
  for (const auto& t : train) volumes.push_back(t.to_volume());

  Rng init(seed);
  net_.init(init);
  seed_ = seed;
  train_config_ = train_config;
  micro_batch = std::max<std::size_t>(1, micro_batch);
  auto step = [&](std::span<const std::size_t> idx, Rng& rng) {
    float loss = 0.0f;
    const auto total = static_cast<float>(idx.size());
    for (std::size_t start = 0; start < idx.size(); start += micro_batch) {
      const std::size_t n = std::min(micro_batch, idx.size() - start);
      std::vector<nn::Volume<float>> xb;
      std::vector<int> yb;
      for (std::size_t k = start; k < start + n; ++k) {
        xb.push_back(volumes[idx[k]]);
        yb.push_back(labels[idx[k]]);
      }
      auto lg = nn::softmax_cross_entropy<float>(net_.forward(std::move(xb), true, rng), yb);
      const float share = static_cast<float>(n) / total;
      lg.grad *= share;
      net_.backward(lg.grad);
      loss += lg.loss * share;
    }
    return loss;
  };
  auto predict_validation = [&] { return labels_of(predict(validation)); };
  log_ = nn::fit<float>(net_.params(), train_config, labels, validation_labels, init.next(), step, predict_validation);
  return log_;
}

nn::Mat<float> VisualClassifier::run(std::span<const FrameTensor> inputs, nn::Mat<float>* penultimate) const {
  nn::Mat<float> logits(static_cast<Eigen::Index>(inputs.size()), 2);
  for (std::size_t start = 0; start < inputs.size(); start += kInferenceBatch) {
    const std::size_t n = std::min(kInferenceBatch, inputs.size() - start);
    std::vector<nn::Volume<float>> vols;
    for (std::size_t i = 0; i < n; ++i) {
      check_geometry(inputs[start + i], net_.config().input);
      vols.push_back(inputs[start + i].to_volume());
    }
    std::vector<const nn::Volume<float>*> ptrs;
    for (const auto& v : vols) ptrs.push_back(&v);
    nn::Mat<float> pen;
    logits.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = net_.infer(ptrs, &pen);
    if (penultimate != nullptr) {
      if (start == 0) penultimate->resize(static_cast<Eigen::Index>(inputs.size()), pen.cols());
      penultimate->middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = pen;
    }
  }
  return logits;
}

std::vector<ProbabilityPair> VisualClassifier::predict(std::span<const FrameTensor> inputs) const {
  const nn::Mat<double> p = nn::softmax<double>(run(inputs, nullptr).cast<double>());
  std::vector<ProbabilityPair> out;
  for (Eigen::Index r = 0; r < p.rows(); ++r) out.push_back({p(r, 0), p(r, 1)});
  return out;
}

nn::Mat<float> VisualClassifier::penultimate(std::span<const FrameTensor> inputs) const {
  nn::Mat<float> out;
  run(inputs, &out);
  return out;
}

void VisualClassifier::save(const std::filesystem::path& dir, const nlohmann::json& extra) {
  nlohmann::json manifest = extra;
  manifest["kind"] = "visual";
  manifest["config"] = net_.config().to_json();
  manifest["train_config"] = nn::to_json(train_config_);
  manifest["seed"] = seed_;
  manifest["training_log"] = nn::to_json(log_);
  nn::save_artifact(dir, manifest, net_.params());
}

VisualClassifier VisualClassifier::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = nn::read_artifact_manifest(dir, "visual");
  VisualClassifier model(VisualModelConfig::from_json(manifest.at("config")));
  model.train_config_ = nn::train_config_from_json(manifest.at("train_config"));
  model.seed_ = manifest.at("seed").get<std::uint64_t>();
  nn::load_artifact_weights(dir, manifest, model.net_.params());
  return model;
}

std::string VisualClassifier::weights_digest() { return nn::weights_digest(net_.params()); }

}  // namespace polyfuse::visual
