#pragma once

#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/core/prediction.hpp"
#include "polyfuse/nn/conv3d.hpp"
#include "polyfuse/nn/mlp.hpp"
#include "polyfuse/nn/trainer.hpp"
#include "polyfuse/visual/frames.hpp"

namespace polyfuse::visual {

struct ConvSpec {
  int filters = 16;
  nn::Extent3 kernel{2, 2, 2};
};
struct PoolSpec {
  nn::Extent3 window{2, 2, 2};
};
using FeatureLayer = std::variant<ConvSpec, PoolSpec>;

struct VisualModelConfig {
  ClipGeometry input;
  /// conv(16) conv(32) pool(1,2,2) conv(64) pool(2,2,2) conv(64) pool(1,2,2)
  std::vector<FeatureLayer> features = default_features();
  std::vector<int> dense = {5000, 500};  // rectified; the last is the penultimate representation
  double dropout = 0.0;

  static std::vector<FeatureLayer> default_features();
  /// Same layer sequence with every width divided by `factor` (at least 1).
  static VisualModelConfig scaled(ClipGeometry input, int factor);

  nlohmann::json to_json() const;
  static VisualModelConfig from_json(const nlohmann::json& j);
};

/// Shape after every feature layer, computed from the configuration alone.
/// Throws ShapeUnderflow when any extent drops below 1 or a kernel does not
/// fit its input.
std::vector<nn::VolumeShape> feature_shapes(const VisualModelConfig& config);

/// 3-D convolutional network: feature layers (each convolution rectified),
/// flatten, rectified dense layers, two-way softmax logits.
template <class S>
class VisualNet {
 public:
  explicit VisualNet(const VisualModelConfig& config) : config_(config) {
    const auto shapes = feature_shapes(config);
    nn::VolumeShape in{3, config.input.frames, config.input.height, config.input.width};
    int k = 0;
    for (std::size_t i = 0; i < config.features.size(); ++i) {
      if (const auto* c = std::get_if<ConvSpec>(&config.features[i])) {
        convs_.emplace_back("visual.conv" + std::to_string(k++), in, c->filters, c->kernel);
        layers_.push_back({true, convs_.size() - 1});
      } else {
        pools_.emplace_back(in, std::get<PoolSpec>(config.features[i]).window);
        layers_.push_back({false, pools_.size() - 1});
      }
      in = shapes[i];
    }
    relu_outputs_.resize(convs_.size());
    flat_ = in;
    head_ = nn::Mlp<S>("visual.head",
                       {in.size(), std::vector<Eigen::Index>(config.dense.begin(), config.dense.end()), 2, config.dropout});
  }

  void init(Rng& rng) {
    for (auto& c : convs_) c.init(rng);
    head_.init(rng);
  }

  nn::Mat<S> forward(std::vector<nn::Volume<S>> xs, bool training, Rng& rng) {
    for (const Layer& l : layers_) {
      if (l.conv) {
        xs = convs_[l.index].forward(xs);
        for (auto& v : xs) v = v.cwiseMax(S(0));
        relu_outputs_[l.index] = xs;
      } else {
        xs = pools_[l.index].forward(xs);
      }
    }
    return head_.forward(flatten(xs), training, rng);
  }

  void backward(const nn::Mat<S>& d_logits) {
    const nn::Mat<S> d_flat = head_.backward(d_logits);
    std::vector<nn::Volume<S>> d(static_cast<std::size_t>(d_flat.rows()));
    for (std::size_t n = 0; n < d.size(); ++n)
      d[n] = Eigen::Map<const nn::Volume<S>>(d_flat.row(static_cast<Eigen::Index>(n)).data(), flat_.channels,
                                             flat_.spatial());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Layer& l = layers_[i];
      if (l.conv) {
        const auto& out = relu_outputs_[l.index];
        for (std::size_t n = 0; n < d.size(); ++n) d[n] = (out[n].array() > S(0)).select(d[n], S(0));
        d = convs_[l.index].backward(d, i > 0);
      } else {
        d = pools_[l.index].backward(d);
      }
    }
    for (auto& o : relu_outputs_) o.clear();
  }

  nn::Mat<S> infer(const std::vector<const nn::Volume<S>*>& xs, nn::Mat<S>* penultimate = nullptr) const {
    nn::Mat<S> flat(static_cast<Eigen::Index>(xs.size()), flat_.size());
    for (std::size_t n = 0; n < xs.size(); ++n) {
      nn::Volume<S> v = *xs[n];
      for (const Layer& l : layers_)
        v = l.conv ? nn::Volume<S>(convs_[l.index].infer(v).cwiseMax(S(0))) : pools_[l.index].infer(v);
      flat.row(static_cast<Eigen::Index>(n)) = Eigen::Map<const nn::RowVec<S>>(v.data(), v.size());
    }
    return head_.infer(flat, penultimate);
  }

  nn::ParamList<S> params() {
    nn::ParamList<S> out;
    for (auto& c : convs_) nn::append(out, c.params());
    nn::append(out, head_.params());
    return out;
  }

  const VisualModelConfig& config() const { return config_; }
  const nn::VolumeShape& flatten_shape() const { return flat_; }
  /// Output shape of every feature layer as constructed.
  std::vector<nn::VolumeShape> layer_shapes() const {
    std::vector<nn::VolumeShape> out;
    for (const Layer& l : layers_)
      out.push_back(l.conv ? convs_[l.index].output_shape() : pools_[l.index].output_shape());
    return out;
  }

 private:
  struct Layer {
    bool conv;
    std::size_t index;
  };

  nn::Mat<S> flatten(const std::vector<nn::Volume<S>>& xs) const {
    nn::Mat<S> flat(static_cast<Eigen::Index>(xs.size()), flat_.size());
    for (std::size_t n = 0; n < xs.size(); ++n)
      flat.row(static_cast<Eigen::Index>(n)) = Eigen::Map<const nn::RowVec<S>>(xs[n].data(), xs[n].size());
    return flat;
  }

  VisualModelConfig config_;
  std::vector<nn::Conv3d<S>> convs_;
  std::vector<nn::MaxPool3d<S>> pools_;
  std::vector<Layer> layers_;
  std::vector<std::vector<nn::Volume<S>>> relu_outputs_;
  nn::VolumeShape flat_;
  nn::Mlp<S> head_;
};

class VisualClassifier {
 public:
  explicit VisualClassifier(VisualModelConfig config = {});

  /// Batches are processed in chunks of `micro_batch` samples with gradients
  /// accumulated, which bounds activation memory without changing the update.
  nn::TrainingLog train(std::span<const FrameTensor> train, std::span<const int> labels,
                        std::span<const FrameTensor> validation, std::span<const int> validation_labels,
                        const nn::TrainConfig& train_config, std::uint64_t seed, std::size_t micro_batch = 8);

  /// Throws ShapeMismatch when a clip geometry differs from the model input.
  std::vector<ProbabilityPair> predict(std::span<const FrameTensor> inputs) const;
  nn::Mat<float> penultimate(std::span<const FrameTensor> inputs) const;

  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object());
  static VisualClassifier load(const std::filesystem::path& dir);

  const VisualModelConfig& config() const { return net_.config(); }
  const nn::TrainingLog& training_log() const { return log_; }
  std::string weights_digest();
  nn::ParamList<float> params() { return net_.params(); }

 private:
  nn::Mat<float> run(std::span<const FrameTensor> inputs, nn::Mat<float>* penultimate) const;

  VisualNet<float> net_;
  nn::TrainingLog log_;
  nn::TrainConfig train_config_;
  std::uint64_t seed_ = 0;
};

}  // namespace polyfuse::visual
