#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/core/prediction.hpp"
#include "polyfuse/nn/lstm.hpp"
#include "polyfuse/nn/mlp.hpp"
#include "polyfuse/nn/trainer.hpp"
#include "polyfuse/text/embedding.hpp"

namespace polyfuse::text {

struct TextModelConfig {
  std::vector<int> recurrent = {128, 64};  // cells per direction, one entry per stacked layer
  std::vector<int> dense = {128};          // rectified layers before the softmax head
  double dropout = 0.2;
  int window = kWindow;
  int embedding_dim = kEmbeddingDim;

  /// The alternative sizing with equal widths in both recurrent layers.
  static TextModelConfig uniform_128();
  nlohmann::json to_json() const;
  static TextModelConfig from_json(const nlohmann::json& j);
};

/// Stacked bidirectional LSTM classifier. Dropout follows every recurrent
/// layer; the summary state of the last one feeds the dense head.
template <class S>
class TextNet {
 public:
  explicit TextNet(const TextModelConfig& config) : config_(config) {
    Eigen::Index in = config.embedding_dim;
    for (std::size_t l = 0; l < config.recurrent.size(); ++l) {
      recurrent_.emplace_back("text.bilstm" + std::to_string(l), in, config.recurrent[l]);
      in = 2 * config.recurrent[l];
    }
    step_dropout_.resize(config.recurrent.size() - 1);
    summary_dropout_ = nn::Dropout<S>(config.dropout);
    std::vector<Eigen::Index> hidden(config.dense.begin(), config.dense.end());
    head_ = nn::Mlp<S>("text.head", {in, hidden, 2, config.dropout});
  }

  void init(Rng& rng) {
    for (auto& r : recurrent_) r.init(rng);
    head_.init(rng);
  }

  nn::Mat<S> forward(const nn::Sequence<S>& xs, const nn::Mat<S>& mask, bool training, Rng& rng) {
    nn::Sequence<S> h = xs;
    const std::size_t last = recurrent_.size() - 1;
    for (std::size_t l = 0; l < last; ++l) {
      h = recurrent_[l].forward(h, mask);
      step_dropout_[l].assign(h.size(), nn::Dropout<S>(config_.dropout));
      for (std::size_t t = 0; t < h.size(); ++t) h[t] = step_dropout_[l][t].forward(h[t], training, rng);
    }
    recurrent_[last].forward(h, mask);
    const nn::Mat<S> summary = summary_dropout_.forward(recurrent_[last].final_state(), training, rng);
    return head_.forward(summary, training, rng);
  }

  void backward(const nn::Mat<S>& d_logits) {
    const nn::Mat<S> d_summary = summary_dropout_.backward(head_.backward(d_logits));
    const std::size_t last = recurrent_.size() - 1;
    nn::Sequence<S> d = recurrent_[last].backward({}, d_summary, last > 0);
    for (std::size_t l = last; l-- > 0;) {
      for (std::size_t t = 0; t < d.size(); ++t) d[t] = step_dropout_[l][t].backward(d[t]);
      d = recurrent_[l].backward(d, nn::Mat<S>(), l > 0);
    }
  }

  /// Logits in inference mode; optionally the penultimate dense activation.
  nn::Mat<S> infer(const nn::Sequence<S>& xs, const nn::Mat<S>& mask, nn::Mat<S>* penultimate = nullptr) {
    nn::Sequence<S> h = xs;
    for (std::size_t l = 0; l + 1 < recurrent_.size(); ++l) h = recurrent_[l].forward(h, mask);
    recurrent_.back().forward(h, mask);
    return head_.infer(recurrent_.back().final_state(), penultimate);
  }

  nn::ParamList<S> params() {
    nn::ParamList<S> out;
    for (auto& r : recurrent_) nn::append(out, r.params());
    nn::append(out, head_.params());
    return out;
  }

  const TextModelConfig& config() const { return config_; }

 private:
  TextModelConfig config_;
  std::vector<nn::BiLstm<S>> recurrent_;
  std::vector<std::vector<nn::Dropout<S>>> step_dropout_;
  nn::Dropout<S> summary_dropout_;
  nn::Mlp<S> head_;
};

/// Time-major batch of text tensors: one batch × dim matrix per step, plus
/// the batch × window mask.
template <class S>
std::pair<nn::Sequence<S>, nn::Mat<S>> make_text_batch(std::span<const TextTensor* const> items, int window, int dim);

class TextClassifier {
 public:
  explicit TextClassifier(TextModelConfig config = {});

  nn::TrainingLog train(std::span<const TextTensor> train, std::span<const int> labels,
                        std::span<const TextTensor> validation, std::span<const int> validation_labels,
                        const nn::TrainConfig& train_config, std::uint64_t seed);

  /// Throws ShapeMismatch when an input is not window × embedding_dim.
  std::vector<ProbabilityPair> predict(std::span<const TextTensor> inputs);
  /// Penultimate dense activations, one row per input.
  nn::Mat<float> penultimate(std::span<const TextTensor> inputs);

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object());
  static TextClassifier load(const std::filesystem::path& dir);

  const TextModelConfig& config() const { return net_.config(); }
  const nn::TrainingLog& training_log() const { return log_; }
  std::string weights_digest();
  nn::ParamList<float> params() { return net_.params(); }

 private:
  nn::Mat<float> run(std::span<const TextTensor> inputs, nn::Mat<float>* penultimate);

  TextNet<float> net_;
  nn::TrainingLog log_;
  nn::TrainConfig train_config_;
  std::uint64_t seed_ = 0;
};

}  // namespace polyfuse::text
