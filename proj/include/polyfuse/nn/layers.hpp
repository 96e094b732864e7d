#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "polyfuse/core/error.hpp"
#include "polyfuse/nn/param.hpp"

namespace polyfuse::nn {

/// Fully connected layer y = x W + b over a batch of row vectors.
template <class S>
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, Eigen::Index in, Eigen::Index out)
      : weight_(name + ".weight", in, out), bias_(name + ".bias", 1, out) {}

  void init(Rng& rng) {
    glorot_uniform(weight_.value, weight_.value.rows(), weight_.value.cols(), rng);
    bias_.value.setZero();
  }

  Mat<S> forward(const Mat<S>& x) {
    input_ = x;
    return infer(x);
  }

  Mat<S> infer(const Mat<S>& x) const {
    Mat<S> y = x * weight_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, bool need_input_grad = true) {
    weight_.grad.noalias() += input_.transpose() * dy;
    bias_.grad.row(0) += dy.colwise().sum();
    if (!need_input_grad) return {};
    return dy * weight_.value.transpose();
  }

  ParamList<S> params() { return {&weight_, &bias_}; }
  Eigen::Index in_features() const { return weight_.value.rows(); }
  Eigen::Index out_features() const { return weight_.value.cols(); }
  Param<S>& weight() { return weight_; }
  Param<S>& bias() { return bias_; }

 private:
  Param<S> weight_;
  Param<S> bias_;
  Mat<S> input_;
};

template <class S>
class ReLU {
 public:
  Mat<S> forward(const Mat<S>& x) {
    output_ = x.cwiseMax(S(0));
    return output_;
  }
  static Mat<S> infer(const Mat<S>& x) { return x.cwiseMax(S(0)); }
  Mat<S> backward(const Mat<S>& dy) const { return (output_.array() > S(0)).select(dy, S(0)); }

 private:
  Mat<S> output_;
};

/// Inverted dropout; identity outside training.
template <class S>
class Dropout {
 public:
  explicit Dropout(double rate = 0.0) : rate_(rate) {}

  Mat<S> forward(const Mat<S>& x, bool training, Rng& rng) {
    if (!training || rate_ <= 0.0) {
      mask_.resize(0, 0);
      return x;
    }
    const S keep_scale = S(1.0 / (1.0 - rate_));
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = rng.bernoulli(rate_) ? S(0) : keep_scale;
    return x.cwiseProduct(mask_);
  }

  Mat<S> backward(const Mat<S>& dy) const { return mask_.size() == 0 ? dy : dy.cwiseProduct(mask_); }
  double rate() const { return rate_; }

 private:
  double rate_;
  Mat<S> mask_;
};

/// Row-wise softmax computed in a numerically stable way.
template <class S>
Mat<S> softmax(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const S peak = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - peak).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <class S>
struct LossGrad {
  S loss;
  Mat<S> grad;  // d(mean loss)/d(logits)
};

/// Mean cross-entropy of softmax(logits) against integer class labels.
template <class S>
LossGrad<S> softmax_cross_entropy(const Mat<S>& logits, std::span<const int> labels) {
  const Mat<S> probs = softmax(logits);
  const auto n = static_cast<S>(labels.size());
  S loss = 0;
  Mat<S> grad = probs;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    loss -= std::log(std::max(probs(r, y), S(1e-30)));
    grad(r, y) -= S(1);
  }
  grad /= n;
  return {loss / n, std::move(grad)};
}

/// Mean binary cross-entropy of sigmoid(logit) for a single-column logit matrix.
template <class S>
LossGrad<S> sigmoid_cross_entropy(const Mat<S>& logits, std::span<const int> labels) {
  const auto n = static_cast<S>(labels.size());
  S loss = 0;
  Mat<S> grad(logits.rows(), 1);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const S z = logits(r, 0);
    const S y = static_cast<S>(labels[static_cast<std::size_t>(r)]);
    // log(1 + exp(-|z|)) + max(z, 0) - y z
    loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, S(0)) - y * z;
    const S p = S(1) / (S(1) + std::exp(-z));
    grad(r, 0) = (p - y) / n;
  }
  return {loss / n, std::move(grad)};
}

template <class S>
S sigmoid(S z) {
  return z >= 0 ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
}

/// Argmax per row of a probability or logit matrix.
template <class S>
std::vector<int> argmax_rows(const Mat<S>& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    m.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace polyfuse::nn
