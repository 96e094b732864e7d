#pragma once

#include <vector>

#include "polyfuse/nn/layers.hpp"

namespace polyfuse::nn {

/// A batch of sequences: one batch × features matrix per time step.
template <class S>
using Sequence = std::vector<Mat<S>>;

/// Single-direction LSTM with gate order (input, forget, cell, output).
/// mask is batch × time with 1 for real tokens; at masked steps the hidden
/// and cell states are carried over unchanged, so padding never alters the
/// state and a reverse pass over right-padded input starts at the last token.
template <class S>
class Lstm {
 public:
  Lstm() = default;
  Lstm(const std::string& name, Eigen::Index in, Eigen::Index hidden, bool reverse)
      : input_weight_(name + ".input_weight", in, 4 * hidden),
        recurrent_weight_(name + ".recurrent_weight", hidden, 4 * hidden),
        bias_(name + ".bias", 1, 4 * hidden),
        hidden_(hidden),
        reverse_(reverse) {}

  void init(Rng& rng) {
    glorot_uniform(input_weight_.value, input_weight_.value.rows(), hidden_, rng);
    glorot_uniform(recurrent_weight_.value, hidden_, hidden_, rng);
    bias_.value.setZero();
    bias_.value.block(0, hidden_, 1, hidden_).setOnes();
  }

  /// Returns the hidden state at every time step (indexed by real time).
  Sequence<S> forward(const Sequence<S>& xs, const Mat<S>& mask) {
    const auto steps = static_cast<Eigen::Index>(xs.size());
    const Eigen::Index batch = steps > 0 ? xs[0].rows() : 0;
    cache_.assign(static_cast<std::size_t>(steps), {});
    mask_ = mask;
    inputs_ = xs;
    Sequence<S> out(static_cast<std::size_t>(steps));
    Mat<S> h = Mat<S>::Zero(batch, hidden_);
    Mat<S> c = Mat<S>::Zero(batch, hidden_);
    for (Eigen::Index k = 0; k < steps; ++k) {
      const Eigen::Index t = reverse_ ? steps - 1 - k : k;
      StepCache& sc = cache_[static_cast<std::size_t>(t)];
      sc.h_prev = h;
      sc.c_prev = c;
      step(xs[static_cast<std::size_t>(t)], h, c, sc);
      const auto m = mask.col(t).array();
      Mat<S> h_next = h;
      Mat<S> c_next = c;
      for (Eigen::Index b = 0; b < batch; ++b) {
        if (m(b) != S(0)) {
          h_next.row(b) = sc.h_new.row(b);
          c_next.row(b) = sc.c_new.row(b);
        }
      }
      h = std::move(h_next);
      c = std::move(c_next);
      out[static_cast<std::size_t>(t)] = h;
    }
    final_ = h;
    return out;
  }

  /// Hidden state after the last processed step.
  const Mat<S>& final_state() const { return final_; }

  /// d_outputs may be empty (no loss on per-step outputs); d_final is the
  /// gradient on final_state(). Returns the gradient on each input step.
  Sequence<S> backward(const Sequence<S>& d_outputs, const Mat<S>& d_final, bool need_input_grad = true) {
    const auto steps = static_cast<Eigen::Index>(cache_.size());
    Sequence<S> dxs(need_input_grad ? static_cast<std::size_t>(steps) : 0);
    Mat<S> dh = d_final;
    Mat<S> dc = Mat<S>::Zero(d_final.rows(), hidden_);
    const Eigen::Index H = hidden_;
    for (Eigen::Index k = steps - 1; k >= 0; --k) {
      const Eigen::Index t = reverse_ ? steps - 1 - k : k;
      const StepCache& sc = cache_[static_cast<std::size_t>(t)];
      if (!d_outputs.empty()) dh += d_outputs[static_cast<std::size_t>(t)];
      const Eigen::Index batch = dh.rows();
      Mat<S> dh_new = Mat<S>::Zero(batch, H);
      Mat<S> dc_new = Mat<S>::Zero(batch, H);
      for (Eigen::Index b = 0; b < batch; ++b) {
        if (mask_(b, t) != S(0)) {
          dh_new.row(b) = dh.row(b);
          dc_new.row(b) = dc.row(b);
          dh.row(b).setZero();
          dc.row(b).setZero();
        }
      }
      // dh and dc now hold only the carried-over part for masked rows.
      const auto tc = sc.c_new.array().tanh();
      const auto i = sc.gates.block(0, 0, batch, H).array();
      const auto f = sc.gates.block(0, H, batch, H).array();
      const auto g = sc.gates.block(0, 2 * H, batch, H).array();
      const auto o = sc.gates.block(0, 3 * H, batch, H).array();
      Mat<S> dcell = dc_new.array() + dh_new.array() * o * (S(1) - tc * tc);
      Mat<S> dz(batch, 4 * H);
      dz.block(0, 0, batch, H) = (dcell.array() * g * i * (S(1) - i)).matrix();
      dz.block(0, H, batch, H) = (dcell.array() * sc.c_prev.array() * f * (S(1) - f)).matrix();
      dz.block(0, 2 * H, batch, H) = (dcell.array() * i * (S(1) - g * g)).matrix();
      dz.block(0, 3 * H, batch, H) = (dh_new.array() * tc * o * (S(1) - o)).matrix();
      const Mat<S>& x = inputs_[static_cast<std::size_t>(t)];
      input_weight_.grad.noalias() += x.transpose() * dz;
      recurrent_weight_.grad.noalias() += sc.h_prev.transpose() * dz;
      bias_.grad.row(0) += dz.colwise().sum();
      if (need_input_grad) dxs[static_cast<std::size_t>(t)] = dz * input_weight_.value.transpose();
      dh.noalias() += dz * recurrent_weight_.value.transpose();
      dc.array() += dcell.array() * f;
    }
    return dxs;
  }

  ParamList<S> params() { return {&input_weight_, &recurrent_weight_, &bias_}; }
  Eigen::Index hidden() const { return hidden_; }

 private:
  struct StepCache {
    Mat<S> h_prev, c_prev, gates, c_new, h_new;
  };

  void step(const Mat<S>& x, const Mat<S>& h, const Mat<S>& c, StepCache& sc) const {
    const Eigen::Index H = hidden_;
    Mat<S> z = x * input_weight_.value;
    z.noalias() += h * recurrent_weight_.value;
    z.rowwise() += bias_.value.row(0);
    sc.gates.resize(z.rows(), z.cols());
    for (Eigen::Index r = 0; r < z.rows(); ++r)
      for (Eigen::Index j = 0; j < 4 * H; ++j) {
        const S v = z(r, j);
        sc.gates(r, j) = (j >= 2 * H && j < 3 * H) ? std::tanh(v) : sigmoid(v);
      }
    const Eigen::Index B = z.rows();
    const auto i = sc.gates.block(0, 0, B, H).array();
    const auto f = sc.gates.block(0, H, B, H).array();
    const auto g = sc.gates.block(0, 2 * H, B, H).array();
    const auto o = sc.gates.block(0, 3 * H, B, H).array();
    sc.c_new = (f * c.array() + i * g).matrix();
    sc.h_new = (o * sc.c_new.array().tanh()).matrix();
  }

  Param<S> input_weight_;
  Param<S> recurrent_weight_;
  Param<S> bias_;
  Eigen::Index hidden_ = 0;
  bool reverse_ = false;
  std::vector<StepCache> cache_;
  Sequence<S> inputs_;
  Mat<S> mask_;
  Mat<S> final_;
};

/// Bidirectional LSTM. Per-step outputs concatenate (forward, backward)
/// states; the summary state concatenates the forward state after the last
/// real token with the backward state after the first token.
template <class S>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, Eigen::Index in, Eigen::Index hidden)
      : forward_(name + ".fwd", in, hidden, false), backward_(name + ".bwd", in, hidden, true) {}

  void init(Rng& rng) {
    forward_.init(rng);
    backward_.init(rng);
  }

  Sequence<S> forward(const Sequence<S>& xs, const Mat<S>& mask) {
    const Sequence<S> f = forward_.forward(xs, mask);
    const Sequence<S> b = backward_.forward(xs, mask);
    return concat_steps(f, b);
  }

  Mat<S> final_state() const { return concat(forward_.final_state(), backward_.final_state()); }

  Sequence<S> backward(const Sequence<S>& d_outputs, const Mat<S>& d_final, bool need_input_grad = true) {
    const Eigen::Index H = forward_.hidden();
    Sequence<S> df, db;
    for (const Mat<S>& d : d_outputs) {
      df.push_back(d.leftCols(H));
      db.push_back(d.rightCols(H));
    }
    Mat<S> dff = d_final.size() ? Mat<S>(d_final.leftCols(H)) : Mat<S>();
    Mat<S> dfb = d_final.size() ? Mat<S>(d_final.rightCols(H)) : Mat<S>();
    if (dff.size() == 0 && !d_outputs.empty()) {
      dff = Mat<S>::Zero(d_outputs[0].rows(), H);
      dfb = dff;
    }
    Sequence<S> dx_f = forward_.backward(df, dff, need_input_grad);
    Sequence<S> dx_b = backward_.backward(db, dfb, need_input_grad);
    for (std::size_t t = 0; t < dx_f.size(); ++t) dx_f[t] += dx_b[t];
    return dx_f;
  }

  ParamList<S> params() {
    ParamList<S> out = forward_.params();
    append(out, backward_.params());
    return out;
  }

  Eigen::Index output_features() const { return 2 * forward_.hidden(); }

 private:
  static Mat<S> concat(const Mat<S>& a, const Mat<S>& b) {
    Mat<S> out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
  }
  static Sequence<S> concat_steps(const Sequence<S>& a, const Sequence<S>& b) {
    Sequence<S> out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = concat(a[t], b[t]);
    return out;
  }

  Lstm<S> forward_;
  Lstm<S> backward_;
};

}  // namespace polyfuse::nn
