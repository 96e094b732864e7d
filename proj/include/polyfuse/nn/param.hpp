#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polyfuse/core/rng.hpp"

namespace polyfuse::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

/// A trainable tensor with its accumulated gradient. Shapes are 2-D; layers
/// with higher-rank kernels flatten them row-major.
template <class S>
struct Param {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<S>::Zero(rows, cols)), grad(Mat<S>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

template <class S>
using ParamList = std::vector<Param<S>*>;

template <class S>
void append(ParamList<S>& into, const ParamList<S>& more) {
  into.insert(into.end(), more.begin(), more.end());
}

/// Glorot-uniform fill with the given fan-in and fan-out.
template <class S>
void glorot_uniform(Mat<S>& m, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.uniform(-limit, limit));
}

template <class S>
std::size_t parameter_count(const ParamList<S>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->size());
  return n;
}

}  // namespace polyfuse::nn
