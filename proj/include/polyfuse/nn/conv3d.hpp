#pragma once

#include <array>
#include <limits>
#include <vector>

#include "polyfuse/nn/layers.hpp"

namespace polyfuse::nn {

/// Channels × time × height × width of one sample.
struct VolumeShape {
  Eigen::Index channels = 0, time = 0, height = 0, width = 0;

  Eigen::Index spatial() const { return time * height * width; }
  Eigen::Index size() const { return channels * spatial(); }
  bool operator==(const VolumeShape&) const = default;
};

using Extent3 = std::array<Eigen::Index, 3>;  // time, height, width

/// Output shape of a stride-1 valid convolution; extents < 1 mean underflow.
inline VolumeShape conv_output_shape(const VolumeShape& in, Eigen::Index filters, const Extent3& kernel) {
  return {filters, in.time - kernel[0] + 1, in.height - kernel[1] + 1, in.width - kernel[2] + 1};
}

/// Output shape of non-overlapping max pooling (floor).
inline VolumeShape pool_output_shape(const VolumeShape& in, const Extent3& window) {
  return {in.channels, in.time / window[0], in.height / window[1], in.width / window[2]};
}

/// One sample stored as a channels × (time·height·width) matrix.
template <class S>
using Volume = Mat<S>;

/// 3-D convolution, stride 1, no padding, via im2col and one GEMM per sample.
template <class S>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(const std::string& name, VolumeShape in, Eigen::Index filters, Extent3 kernel)
      : in_(in),
        kernel_(kernel),
        out_(conv_output_shape(in, filters, kernel)),
        weight_(name + ".weight", filters, in.channels * kernel[0] * kernel[1] * kernel[2]),
        bias_(name + ".bias", filters, 1) {}

  void init(Rng& rng) {
    const Eigen::Index taps = kernel_[0] * kernel_[1] * kernel_[2];
    glorot_uniform(weight_.value, in_.channels * taps, out_.channels * taps, rng);
    bias_.value.setZero();
  }

  std::vector<Volume<S>> forward(const std::vector<Volume<S>>& xs) {
    inputs_ = xs;
    std::vector<Volume<S>> out;
    out.reserve(xs.size());
    for (const Volume<S>& x : xs) out.push_back(infer(x));
    return out;
  }

  Volume<S> infer(const Volume<S>& x) const {
    Mat<S> cols;
    im2col(x, cols);
    Volume<S> y = weight_.value * cols;
    y.colwise() += bias_.value.col(0);
    return y;
  }

  std::vector<Volume<S>> backward(const std::vector<Volume<S>>& dys, bool need_input_grad = true) {
    std::vector<Volume<S>> dxs;
    Mat<S> cols;
    for (std::size_t n = 0; n < dys.size(); ++n) {
      im2col(inputs_[n], cols);
      weight_.grad.noalias() += dys[n] * cols.transpose();
      bias_.grad.col(0) += dys[n].rowwise().sum();
      if (need_input_grad) {
        const Mat<S> dcols = weight_.value.transpose() * dys[n];
        dxs.push_back(col2im(dcols));
      }
    }
    return dxs;
  }

  ParamList<S> params() { return {&weight_, &bias_}; }
  const VolumeShape& input_shape() const { return in_; }
  const VolumeShape& output_shape() const { return out_; }

 private:
  // cols is (C·kt·kh·kw) × (To·Ho·Wo); each row is a shifted view of one input channel.
  void im2col(const Volume<S>& x, Mat<S>& cols) const {
    cols.resize(weight_.value.cols(), out_.spatial());
    Eigen::Index row = 0;
    for (Eigen::Index c = 0; c < in_.channels; ++c)
      for (Eigen::Index a = 0; a < kernel_[0]; ++a)
        for (Eigen::Index b = 0; b < kernel_[1]; ++b)
          for (Eigen::Index d = 0; d < kernel_[2]; ++d, ++row) {
            S* dst = cols.row(row).data();
            const S* src = x.row(c).data();
            for (Eigen::Index t = 0; t < out_.time; ++t)
              for (Eigen::Index h = 0; h < out_.height; ++h) {
                const S* s = src + ((t + a) * in_.height + h + b) * in_.width + d;
                std::copy(s, s + out_.width, dst);
                dst += out_.width;
              }
          }
  }

  Volume<S> col2im(const Mat<S>& cols) const {
    Volume<S> dx = Volume<S>::Zero(in_.channels, in_.spatial());
    Eigen::Index row = 0;
    for (Eigen::Index c = 0; c < in_.channels; ++c)
      for (Eigen::Index a = 0; a < kernel_[0]; ++a)
        for (Eigen::Index b = 0; b < kernel_[1]; ++b)
          for (Eigen::Index d = 0; d < kernel_[2]; ++d, ++row) {
            const S* src = cols.row(row).data();
            S* base = dx.row(c).data();
            for (Eigen::Index t = 0; t < out_.time; ++t)
              for (Eigen::Index h = 0; h < out_.height; ++h) {
                S* dst = base + ((t + a) * in_.height + h + b) * in_.width + d;
                for (Eigen::Index w = 0; w < out_.width; ++w) dst[w] += src[w];
                src += out_.width;
              }
          }
    return dx;
  }

  VolumeShape in_;
  Extent3 kernel_{};
  VolumeShape out_;
  Param<S> weight_;
  Param<S> bias_;
  std::vector<Volume<S>> inputs_;
};

/// Non-overlapping 3-D max pooling; trailing elements that do not fill a
/// window are dropped.
template <class S>
class MaxPool3d {
 public:
  MaxPool3d() = default;
  MaxPool3d(VolumeShape in, Extent3 window) : in_(in), window_(window), out_(pool_output_shape(in, window)) {}

  std::vector<Volume<S>> forward(const std::vector<Volume<S>>& xs) {
    argmax_.assign(xs.size(), {});
    std::vector<Volume<S>> out;
    out.reserve(xs.size());
    for (std::size_t n = 0; n < xs.size(); ++n) out.push_back(pool(xs[n], &argmax_[n]));
    return out;
  }

  Volume<S> infer(const Volume<S>& x) const { return pool(x, nullptr); }

  std::vector<Volume<S>> backward(const std::vector<Volume<S>>& dys) const {
    std::vector<Volume<S>> dxs;
    for (std::size_t n = 0; n < dys.size(); ++n) {
      Volume<S> dx = Volume<S>::Zero(in_.channels, in_.spatial());
      const auto& idx = argmax_[n];
      for (Eigen::Index c = 0; c < out_.channels; ++c)
        for (Eigen::Index j = 0; j < out_.spatial(); ++j)
          dx(c, idx[static_cast<std::size_t>(c * out_.spatial() + j)]) += dys[n](c, j);
      dxs.push_back(std::move(dx));
    }
    return dxs;
  }

  const VolumeShape& output_shape() const { return out_; }

 private:
  Volume<S> pool(const Volume<S>& x, std::vector<Eigen::Index>* argmax) const {
    Volume<S> y(out_.channels, out_.spatial());
    if (argmax != nullptr) argmax->resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index c = 0; c < out_.channels; ++c)
      for (Eigen::Index t = 0; t < out_.time; ++t)
        for (Eigen::Index h = 0; h < out_.height; ++h)
          for (Eigen::Index w = 0; w < out_.width; ++w) {
            S best = -std::numeric_limits<S>::infinity();
            Eigen::Index best_at = 0;
            for (Eigen::Index a = 0; a < window_[0]; ++a)
              for (Eigen::Index b = 0; b < window_[1]; ++b)
                for (Eigen::Index d = 0; d < window_[2]; ++d) {
                  const Eigen::Index at =
                      ((t * window_[0] + a) * in_.height + h * window_[1] + b) * in_.width + w * window_[2] + d;
                  if (x(c, at) > best) {
                    best = x(c, at);
                    best_at = at;
                  }
                }
            const Eigen::Index j = (t * out_.height + h) * out_.width + w;
            y(c, j) = best;
            if (argmax != nullptr) (*argmax)[static_cast<std::size_t>(c * out_.spatial() + j)] = best_at;
          }
    return y;
  }

  VolumeShape in_;
  Extent3 window_{};
  VolumeShape out_;
  std::vector<std::vector<Eigen::Index>> argmax_;
};

}  // namespace polyfuse::nn
