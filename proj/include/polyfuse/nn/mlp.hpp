#pragma once

#include <vector>

#include "polyfuse/nn/layers.hpp"

namespace polyfuse::nn {

struct MlpShape {
  Eigen::Index input = 0;
  std::vector<Eigen::Index> hidden;  // rectified layers, each followed by dropout
  Eigen::Index output = 2;
  double dropout = 0.0;
};

/// Stack of dense layers: rectified hidden layers and a linear output (logits).
template <class S>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const MlpShape& shape) : shape_(shape) {
    Eigen::Index in = shape.input;
    for (std::size_t k = 0; k < shape.hidden.size(); ++k) {
      dense_.emplace_back(name + ".dense" + std::to_string(k), in, shape.hidden[k]);
      relu_.emplace_back();
      dropout_.emplace_back(shape.dropout);
      in = shape.hidden[k];
    }
    dense_.emplace_back(name + ".out", in, shape.output);
  }

  void init(Rng& rng) {
    for (auto& d : dense_) d.init(rng);
  }

  Mat<S> forward(const Mat<S>& x, bool training, Rng& rng) {
    Mat<S> h = x;
    for (std::size_t k = 0; k < relu_.size(); ++k) {
      h = relu_[k].forward(dense_[k].forward(h));
      h = dropout_[k].forward(h, training, rng);
    }
    return dense_.back().forward(h);
  }

  /// Logits without touching training caches; optionally exposes the last
  /// hidden activation (the input of the output layer).
  Mat<S> infer(const Mat<S>& x, Mat<S>* penultimate = nullptr) const {
    Mat<S> h = x;
    for (std::size_t k = 0; k < relu_.size(); ++k) h = ReLU<S>::infer(dense_[k].infer(h));
    if (penultimate != nullptr) *penultimate = h;
    return dense_.back().infer(h);
  }

  Mat<S> backward(const Mat<S>& d_logits, bool need_input_grad = true) {
    Mat<S> d = dense_.back().backward(d_logits);
    for (std::size_t k = relu_.size(); k-- > 0;) {
      d = relu_[k].backward(dropout_[k].backward(d));
      d = dense_[k].backward(d, need_input_grad || k > 0);
    }
    return d;
  }

  ParamList<S> params() {
    ParamList<S> out;
    for (auto& d : dense_) append(out, d.params());
    return out;
  }

  Dense<S>& layer(std::size_t k) { return dense_[k]; }
  const MlpShape& shape() const { return shape_; }

 private:
  MlpShape shape_;
  std::vector<Dense<S>> dense_;
  std::vector<ReLU<S>> relu_;
  std::vector<Dropout<S>> dropout_;
};

}  // namespace polyfuse::nn
