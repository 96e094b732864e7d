#include "polyfuse/text/text_model.hpp"

#include "polyfuse/core/error.hpp"
#include "polyfuse/nn/artifact.hpp"
#include "polyfuse/nn/weights.hpp"

namespace polyfuse::text {

namespace {

constexpr std::size_t kInferenceBatch = 64;

std::vector<ProbabilityPair> to_pairs(const nn::Mat<float>& logits) {
  std::vector<ProbabilityPair> out;
  out.reserve(static_cast<std::size_t>(logits.rows()));
  const nn::Mat<double> p = nn::softmax<double>(logits.cast<double>());
  for (Eigen::Index r = 0; r < p.rows(); ++r) out.push_back({p(r, 0), p(r, 1)});
  return out;
}

}  // namespace

TextModelConfig TextModelConfig::uniform_128() {
  TextModelConfig c;
  c.recurrent = {128, 128};
  return c;
}

nlohmann::json TextModelConfig::to_json() const {
  return {{"recurrent", recurrent}, {"dense", dense}, {"dropout", dropout}, {"window", window},
          {"embedding_dim", embedding_dim}};
}

TextModelConfig TextModelConfig::from_json(const nlohmann::json& j) {
  TextModelConfig c;
  c.recurrent = j.value("recurrent", c.recurrent);
  c.dense = j.value("dense", c.dense);
  c.dropout = j.value("dropout", c.dropout);
  c.window = j.value("window", c.window);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  if (c.recurrent.empty()) throw Error(ErrorCode::ConfigError, "text model needs at least one recurrent layer");
  return c;
}

template <class S>
std::pair<nn::Sequence<S>, nn::Mat<S>> make_text_batch(std::span<const TextTensor* const> items, int window, int dim) {
  const auto batch = static_cast<Eigen::Index>(items.size());
  nn::Sequence<S> xs(static_cast<std::size_t>(window), nn::Mat<S>(batch, dim));
  nn::Mat<S> mask(batch, window);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const TextTensor& t = *items[static_cast<std::size_t>(b)];
    if (t.values.rows() != window || t.values.cols() != dim || t.mask.size() != static_cast<std::size_t>(window))
      throw Error(ErrorCode::ShapeMismatch, "text input is " + std::to_string(t.values.rows()) + "x" +
                                                std::to_string(t.values.cols()) + ", model expects " +
                                                std::to_string(window) + "x" + std::to_string(dim));
    for (int s = 0; s < window; ++s) {
      xs[static_cast<std::size_t>(s)].row(b) = t.values.row(s).template cast<S>();
      mask(b, s) = t.mask[static_cast<std::size_t>(s)] ? S(1) : S(0);
    }
  }
  return {std::move(xs), std::move(mask)};
}

template std::pair<nn::Sequence<float>, nn::Mat<float>> make_text_batch<float>(std::span<const TextTensor* const>, int,
                                                                               int);
template std::pair<nn::Sequence<double>, nn::Mat<double>> make_text_batch<double>(std::span<const TextTensor* const>,
                                                                                  int, int);

TextClassifier::TextClassifier(TextModelConfig config) : net_(config) {
  Rng rng(0);
  net_.init(rng);
}

nn::TrainingLog TextClassifier::train(std::span<const TextTensor> train, std::span<const int> labels,
                                      std::span<const TextTensor> validation, std::span<const int> validation_labels,
                                      const nn::TrainConfig& train_config, std::uint64_t seed) {
  if (train.size() != labels.size() || validation.size() != validation_labels.size())
    throw Error(ErrorCode::LengthMismatch, "text inputs and labels differ in length");
  Rng init(seed);
  net_.init(init);
  seed_ = seed;
  train_config_ = train_config;
  const TextModelConfig& c = net_.config();
  auto step = [&](std::span<const std::size_t> idx, Rng& rng) {
    std::vector<const TextTensor*> items;
    std::vector<int> y;
    for (std::size_t i : idx) {
      items.push_back(&train[i]);
      y.push_back(labels[i]);
    }
    auto [xs, mask] = make_text_batch<float>(items, c.window, c.embedding_dim);
    const auto lg = nn::softmax_cross_entropy<float>(net_.forward(xs, mask, true, rng), y);
    net_.backward(lg.grad);
    return lg.loss;
  };
  auto predict_validation = [&] { return labels_of(predict(validation)); };
  log_ = nn::fit<float>(net_.params(), train_config, labels, validation_labels, init.next(), step, predict_validation);
  return log_;
}

nn::Mat<float> TextClassifier::run(std::span<const TextTensor> inputs, nn::Mat<float>* penultimate) {
  const TextModelConfig& c = net_.config();
  nn::Mat<float> logits(static_cast<Eigen::Index>(inputs.size()), 2);
  if (penultimate != nullptr)
    penultimate->resize(static_cast<Eigen::Index>(inputs.size()),
                        c.dense.empty() ? 2 * c.recurrent.back() : c.dense.back());
  for (std::size_t start = 0; start < inputs.size(); start += kInferenceBatch) {
    const std::size_t n = std::min(kInferenceBatch, inputs.size() - start);
    std::vector<const TextTensor*> items;
    for (std::size_t i = 0; i < n; ++i) items.push_back(&inputs[start + i]);
    auto [xs, mask] = make_text_batch<float>(items, c.window, c.embedding_dim);
    nn::Mat<float> pen;
    logits.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = net_.infer(xs, mask, &pen);
    if (penultimate != nullptr)
      penultimate->middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = pen;
  }
  return logits;
}

std::vector<ProbabilityPair> TextClassifier::predict(std::span<const TextTensor> inputs) {
  return to_pairs(run(inputs, nullptr));
}

nn::Mat<float> TextClassifier::penultimate(std::span<const TextTensor> inputs) {
  nn::Mat<float> out;
  run(inputs, &out);
  return out;
}

void TextClassifier::save(const std::filesystem::path& dir, const nlohmann::json& extra) {
  nlohmann::json manifest = extra;
  manifest["kind"] = "text";
  manifest["config"] = net_.config().to_json();
  manifest["train_config"] = nn::to_json(train_config_);
  manifest["seed"] = seed_;
  manifest["training_log"] = nn::to_json(log_);
  nn::save_artifact(dir, manifest, net_.params());
}

TextClassifier TextClassifier::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = nn::read_artifact_manifest(dir, "text");
  TextClassifier model(TextModelConfig::from_json(manifest.at("config")));
  model.train_config_ = nn::train_config_from_json(manifest.at("train_config"));
  model.seed_ = manifest.at("seed").get<std::uint64_t>();
  nn::load_artifact_weights(dir, manifest, model.net_.params());
  return model;
}

std::string TextClassifier::weights_digest() { return nn::weights_digest(net_.params()); }

}  // namespace polyfuse::text
