#include "polyfuse/nn/mlp_classifier.hpp"

#include "polyfuse/core/error.hpp"
#include "polyfuse/nn/artifact.hpp"
#include "polyfuse/nn/weights.hpp"

namespace polyfuse::nn {

nlohmann::json MlpClassifierConfig::to_json() const {
  return {{"hidden", hidden}, {"dropout", dropout}, {"output", sigmoid_output ? "sigmoid" : "softmax"}};
}

MlpClassifierConfig MlpClassifierConfig::from_json(const nlohmann::json& j) {
  MlpClassifierConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.sigmoid_output = j.value("output", std::string("softmax")) == "sigmoid";
  return c;
}

namespace {

MlpShape shape_of(const MlpClassifierConfig& c, Eigen::Index input_dim) {
  return {input_dim, std::vector<Eigen::Index>(c.hidden.begin(), c.hidden.end()), c.sigmoid_output ? 1 : 2, c.dropout};
}

}  // namespace

MlpClassifier::MlpClassifier(std::string kind, MlpClassifierConfig config, Eigen::Index input_dim)
    : kind_(std::move(kind)), config_(std::move(config)), input_dim_(input_dim), net_(kind_, shape_of(config_, input_dim)) {
  Rng rng(0);
  net_.init(rng);
}

void MlpClassifier::check_input(const Mat<float>& x) const {
  if (x.cols() != input_dim_)
    throw Error(ErrorCode::ShapeMismatch, kind_ + " model expects " + std::to_string(input_dim_) +
                                              " features, got " + std::to_string(x.cols()));
  if (!x.allFinite()) throw Error(ErrorCode::ValidationError, kind_ + " model input contains non-finite values");
}

TrainingLog MlpClassifier::train(const Mat<float>& x, std::span<const int> labels, const Mat<float>& validation,
                                 std::span<const int> validation_labels, const TrainConfig& train_config,
                                 std::uint64_t seed) {
  check_input(x);
  if (validation.rows() > 0) check_input(validation);
  if (static_cast<std::size_t>(x.rows()) != labels.size() ||
      static_cast<std::size_t>(validation.rows()) != validation_labels.size())
    throw Error(ErrorCode::LengthMismatch, kind_ + " inputs and labels differ in length");
  Rng init(seed);
  net_.init(init);
  seed_ = seed;
  train_config_ = train_config;
  auto step = [&](std::span<const std::size_t> idx, Rng& rng) {
    Mat<float> xb(static_cast<Eigen::Index>(idx.size()), x.cols());
    std::vector<int> yb;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      xb.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(idx[k]));
      yb.push_back(labels[idx[k]]);
    }
    const Mat<float> logits = net_.forward(xb, true, rng);
    const auto lg = config_.sigmoid_output ? sigmoid_cross_entropy<float>(logits, yb)
                                           : softmax_cross_entropy<float>(logits, yb);
    net_.backward(lg.grad, false);
    return lg.loss;
  };
  auto predict_validation = [&] { return labels_of(predict(validation)); };
  log_ = fit<float>(net_.params(), train_config, labels, validation_labels, init.next(), step, predict_validation);
  return log_;
}

std::vector<ProbabilityPair> MlpClassifier::predict(const Mat<float>& x) const {
  check_input(x);
  const Mat<double> logits = net_.infer(x).cast<double>();
  std::vector<ProbabilityPair> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  if (config_.sigmoid_output) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const double p = sigmoid(logits(r, 0));
      out.push_back({1.0 - p, p});
    }
  } else {
    const Mat<double> p = softmax<double>(logits);
    for (Eigen::Index r = 0; r < p.rows(); ++r) out.push_back({p(r, 0), p(r, 1)});
  }
  return out;
}

Mat<float> MlpClassifier::penultimate(const Mat<float>& x) const {
  check_input(x);
  Mat<float> pen;
  net_.infer(x, &pen);
  return pen;
}

void MlpClassifier::save(const std::filesystem::path& dir, const nlohmann::json& extra) {
  nlohmann::json manifest = extra;
  manifest["kind"] = kind_;
  manifest["config"] = config_.to_json();
  manifest["input_dim"] = input_dim_;
  manifest["train_config"] = to_json(train_config_);
  manifest["seed"] = seed_;
  manifest["training_log"] = to_json(log_);
  save_artifact(dir, manifest, net_.params());
}

MlpClassifier MlpClassifier::load(const std::filesystem::path& dir, const std::string& kind) {
  const nlohmann::json manifest = read_artifact_manifest(dir, kind);
  MlpClassifier model(kind, MlpClassifierConfig::from_json(manifest.at("config")),
                      manifest.at("input_dim").get<Eigen::Index>());
  model.train_config_ = train_config_from_json(manifest.at("train_config"));
  model.seed_ = manifest.at("seed").get<std::uint64_t>();
  load_artifact_weights(dir, manifest, model.net_.params());
  return model;
}

std::string MlpClassifier::weights_digest() { return nn::weights_digest(net_.params()); }

}  // namespace polyfuse::nn
