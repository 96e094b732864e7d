#pragma once

#include <cmath>

#include "polyfuse/nn/param.hpp"

namespace polyfuse::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class S>
class Adam {
 public:
  Adam(ParamList<S> params, AdamConfig config) : params_(std::move(params)), config_(config) {
    for (const Param<S>* p : params_) {
      first_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  /// Applies one update from the accumulated gradients, then clears them.
  void step() {
    ++steps_;
    const S b1 = static_cast<S>(config_.beta1);
    const S b2 = static_cast<S>(config_.beta2);
    const S lr = static_cast<S>(config_.learning_rate);
    const S eps = static_cast<S>(config_.epsilon);
    const S c1 = S(1) - static_cast<S>(std::pow(config_.beta1, steps_));
    const S c2 = S(1) - static_cast<S>(std::pow(config_.beta2, steps_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Param<S>& p = *params_[k];
      auto g = p.grad.array();
      auto m = first_[k].array();
      auto v = second_[k].array();
      m = b1 * m + (S(1) - b1) * g;
      v = b2 * v + (S(1) - b2) * g * g;
      p.value.array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
      p.grad.setZero();
    }
  }

  void zero_grad() {
    for (Param<S>* p : params_) p->zero_grad();
  }

  long steps() const { return steps_; }

 private:
  ParamList<S> params_;
  AdamConfig config_;
  std::vector<Mat<S>> first_;
  std::vector<Mat<S>> second_;
  long steps_ = 0;
};

}  // namespace polyfuse::nn
