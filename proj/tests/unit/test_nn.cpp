#include <doctest.h>

#include <cmath>

#include "error_capture.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "polyfuse/nn/conv3d.hpp"
#include "polyfuse/nn/lstm.hpp"
#include "polyfuse/nn/mlp.hpp"
#include "polyfuse/nn/trainer.hpp"
#include "polyfuse/nn/weights.hpp"

using namespace polyfuse;
using namespace polyfuse::nn;
using fixtures::code_of;
using fixtures::gradient_check;

namespace {

template <class S>
Mat<S> random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Mat<S> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.normal() * scale);
  return m;
}

double weighted_sum(const Mat<double>& m, const Mat<double>& w) { return (m.array() * w.array()).sum(); }

}  // namespace

TEST_CASE("softmax rows are distributions") {
  Rng rng(1);
  const Mat<double> p = softmax(random_mat<double>(20, 2, rng, 50.0));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.row(r).minCoeff() >= 0.0);
  }
}

TEST_CASE("mlp with softmax cross-entropy passes the gradient check") {
  Rng rng(2);
  Mlp<double> mlp("mlp", {5, {4, 3}, 2, 0.0});
  mlp.init(rng);
  const Mat<double> x = random_mat<double>(6, 5, rng);
  const std::vector<int> y = {0, 1, 1, 0, 1, 0};
  Rng unused(0);
  const auto lg = softmax_cross_entropy<double>(mlp.forward(x, true, unused), y);
  const Mat<double> dx = mlp.backward(lg.grad);
  const auto loss = [&] { return softmax_cross_entropy<double>(mlp.infer(x), y).loss; };
  const auto r = gradient_check(mlp.params(), loss);
  CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_param);

  // Input gradient.
  Mat<double> xp = x;
  const double h = 1e-6;
  xp(2, 3) += h;
  const double up = softmax_cross_entropy<double>(mlp.infer(xp), y).loss;
  xp(2, 3) -= 2 * h;
  const double down = softmax_cross_entropy<double>(mlp.infer(xp), y).loss;
  CHECK(dx(2, 3) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("sigmoid head passes the gradient check") {
  Rng rng(3);
  Mlp<double> mlp("audio", {6, {5, 4}, 1, 0.0});
  mlp.init(rng);
  const Mat<double> x = random_mat<double>(5, 6, rng);
  const std::vector<int> y = {1, 0, 0, 1, 1};
  Rng unused(0);
  mlp.backward(sigmoid_cross_entropy<double>(mlp.forward(x, true, unused), y).grad);
  const auto r =
      gradient_check(mlp.params(), [&] { return sigmoid_cross_entropy<double>(mlp.infer(x), y).loss; });
  CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_param);
}

TEST_CASE("dropout is identity at inference and rescales kept units in training") {
  Rng rng(4);
  Dropout<double> d(0.5);
  const Mat<double> x = Mat<double>::Constant(200, 10, 3.0);
  CHECK(d.forward(x, false, rng) == x);
  const Mat<double> y = d.forward(x, true, rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) CHECK((y.data()[i] == 0.0 || y.data()[i] == 6.0));
  CHECK(y.mean() == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("masked lstm passes the gradient check on params and inputs") {
  Rng rng(5);
  const Eigen::Index steps = 4, batch = 3, in = 3, hidden = 2;
  Lstm<double> lstm("lstm", in, hidden, false);
  lstm.init(rng);
  Sequence<double> xs;
  for (Eigen::Index t = 0; t < steps; ++t) xs.push_back(random_mat<double>(batch, in, rng));
  Mat<double> mask(batch, steps);
  mask << 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0;
  Sequence<double> out_w;
  for (Eigen::Index t = 0; t < steps; ++t) out_w.push_back(random_mat<double>(batch, hidden, rng));
  const Mat<double> final_w = random_mat<double>(batch, hidden, rng);

  auto loss_of = [&](Lstm<double>& net, const Sequence<double>& inputs) {
    const Sequence<double> out = net.forward(inputs, mask);
    double l = weighted_sum(net.final_state(), final_w);
    for (Eigen::Index t = 0; t < steps; ++t) l += weighted_sum(out[t], out_w[t]);
    return l;
  };
  loss_of(lstm, xs);
  const Sequence<double> dxs = lstm.backward(out_w, final_w);
  Lstm<double> probe = lstm;
  const auto r = gradient_check(lstm.params(), [&] {
    probe = lstm;
    return loss_of(probe, xs);
  });
  CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_param);

  double worst = 0.0;
  for (Eigen::Index t = 0; t < steps; ++t)
    for (Eigen::Index i = 0; i < batch * in; ++i) {
      Sequence<double> xp = xs;
      const double h = 1e-6;
      xp[t].data()[i] += h;
      probe = lstm;
      const double up = loss_of(probe, xp);
      xp[t].data()[i] -= 2 * h;
      probe = lstm;
      const double down = loss_of(probe, xp);
      const double numeric = (up - down) / (2 * h);
      const double analytic = dxs[t].data()[i];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale > 1e-7) worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  CHECK(worst < 1e-4);
  // Fully padded sequence (row 2) receives no input gradient.
  for (Eigen::Index t = 0; t < steps; ++t) CHECK(dxs[t].row(2).isZero());
}

TEST_CASE("stacked bidirectional lstm passes the gradient check") {
  Rng rng(6);
  const Eigen::Index steps = 3, batch = 2;
  BiLstm<double> first("bi1", 3, 2);
  BiLstm<double> second("bi2", 4, 2);
  first.init(rng);
  second.init(rng);
  Sequence<double> xs;
  for (Eigen::Index t = 0; t < steps; ++t) xs.push_back(random_mat<double>(batch, 3, rng));
  Mat<double> mask(batch, steps);
  mask << 1, 1, 1, 1, 1, 0;
  const Mat<double> w = random_mat<double>(batch, 4, rng);

  auto run = [&](BiLstm<double>& a, BiLstm<double>& b) {
    b.forward(a.forward(xs, mask), mask);
    return weighted_sum(b.final_state(), w);
  };
  run(first, second);
  const Sequence<double> d_mid = second.backward({}, w);
  first.backward(d_mid, Mat<double>());
  ParamList<double> params = first.params();
  append(params, second.params());
  BiLstm<double> pa, pb;
  const auto r = gradient_check(params, [&] {
    pa = first;
    pb = second;
    return run(pa, pb);
  });
  CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_param);
}

TEST_CASE("padding content never changes the lstm summary state") {
  Rng rng(7);
  BiLstm<double> net("bi", 3, 4);
  net.init(rng);
  Sequence<double> xs;
  for (int t = 0; t < 5; ++t) xs.push_back(random_mat<double>(1, 3, rng));
  Mat<double> mask(1, 5);
  mask << 1, 1, 1, 0, 0;
  net.forward(xs, mask);
  const Mat<double> clean = net.final_state();
  xs[3] = random_mat<double>(1, 3, rng, 100.0);
  xs[4] = random_mat<double>(1, 3, rng, 100.0);
  net.forward(xs, mask);
  CHECK(net.final_state() == clean);

  // Truncating the padding gives the same summary as well.
  Sequence<double> shorter(xs.begin(), xs.begin() + 3);
  net.forward(shorter, Mat<double>::Ones(1, 3));
  CHECK((net.final_state() - clean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conv3d matches a direct convolution") {
  Rng rng(8);
  const VolumeShape in{2, 4, 5, 6};
  Conv3d<double> conv("conv", in, 3, {2, 2, 3});
  conv.init(rng);
  ParamList<double> ps = conv.params();
  ps[1]->value = random_mat<double>(3, 1, rng);
  const Mat<double> x = random_mat<double>(in.channels, in.spatial(), rng);
  const Mat<double> y = conv.infer(x);
  const VolumeShape out = conv.output_shape();
  REQUIRE(out == VolumeShape{3, 3, 4, 4});
  const Mat<double>& w = ps[0]->value;
  double worst = 0.0;
  for (Eigen::Index f = 0; f < 3; ++f)
    for (Eigen::Index t = 0; t < out.time; ++t)
      for (Eigen::Index h = 0; h < out.height; ++h)
        for (Eigen::Index v = 0; v < out.width; ++v) {
          double acc = ps[1]->value(f, 0);
          for (Eigen::Index c = 0; c < in.channels; ++c)
            for (Eigen::Index a = 0; a < 2; ++a)
              for (Eigen::Index b = 0; b < 2; ++b)
                for (Eigen::Index d = 0; d < 3; ++d)
                  acc += w(f, ((c * 2 + a) * 2 + b) * 3 + d) *
                         x(c, ((t + a) * in.height + h + b) * in.width + v + d);
          worst = std::max(worst, std::abs(acc - y(f, (t * out.height + h) * out.width + v)));
        }
  CHECK(worst < 1e-12);
}

TEST_CASE("conv3d and max pooling pass the gradient check") {
  Rng rng(9);
  const VolumeShape in{1, 4, 8, 8};
  Conv3d<double> conv("conv", in, 2, {2, 2, 2});
  conv.init(rng);
  MaxPool3d<double> pool(conv.output_shape(), {1, 2, 2});
  Conv3d<double> conv2("conv2", pool.output_shape(), 2, {2, 2, 2});
  conv2.init(rng);
  std::vector<Mat<double>> xs = {random_mat<double>(1, in.spatial(), rng), random_mat<double>(1, in.spatial(), rng)};
  const VolumeShape out = conv2.output_shape();
  REQUIRE(out == VolumeShape{2, 2, 2, 2});
  const Mat<double> w = random_mat<double>(out.channels, out.spatial(), rng);

  auto run = [&](const std::vector<Mat<double>>& inputs, bool train) {
    double l = 0;
    std::vector<Mat<double>> a = train ? conv.forward(inputs) : std::vector<Mat<double>>{};
    if (!train)
      for (const auto& x : inputs) a.push_back(conv.infer(x));
    std::vector<Mat<double>> p = train ? pool.forward(a) : std::vector<Mat<double>>{};
    if (!train)
      for (const auto& v : a) p.push_back(pool.infer(v));
    std::vector<Mat<double>> o = train ? conv2.forward(p) : std::vector<Mat<double>>{};
    if (!train)
      for (const auto& v : p) o.push_back(conv2.infer(v));
    for (const auto& v : o) l += weighted_sum(v, w);
    return l;
  };
  run(xs, true);
  const std::vector<Mat<double>> dxs = conv.backward(pool.backward(conv2.backward({w, w})));
  ParamList<double> params = conv.params();
  append(params, conv2.params());
  const auto r = gradient_check(params, [&] { return run(xs, false); });
  CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_param);

  double worst = 0.0;
  for (Eigen::Index i = 0; i < in.spatial(); i += 7) {
    auto xp = xs;
    xp[1].data()[i] += 1e-6;
    const double up = run(xp, false);
    xp[1].data()[i] -= 2e-6;
    const double down = run(xp, false);
    const double numeric = (up - down) / 2e-6;
    const double scale = std::max(std::abs(numeric), std::abs(dxs[1].data()[i]));
    if (scale > 1e-7) worst = std::max(worst, std::abs(numeric - dxs[1].data()[i]) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("shape calculators") {
  VolumeShape s{3, 16, 64, 64};
  s = conv_output_shape(s, 16, {2, 2, 2});
  CHECK(s == VolumeShape{16, 15, 63, 63});
  s = pool_output_shape(s, {1, 2, 2});
  CHECK(s == VolumeShape{16, 15, 31, 31});
  CHECK(pool_output_shape(VolumeShape{1, 5, 5, 5}, {2, 2, 2}) == VolumeShape{1, 2, 2, 2});
}

TEST_CASE("adam minimizes a quadratic") {
  Param<double> p("p", 1, 3);
  p.value << 5, -3, 2;
  Adam<double> opt({&p}, AdamConfig{0.05});
  for (int i = 0; i < 2000; ++i) {
    p.grad = 2 * p.value;
    opt.step();
  }
  CHECK(p.value.cwiseAbs().maxCoeff() < 1e-2);
  CHECK(p.grad.isZero());
}

namespace {

struct ToyProblem {
  Mat<float> x;
  std::vector<int> y;
};

ToyProblem toy(int n, std::uint64_t seed) {
  Rng rng(seed);
  ToyProblem p{Mat<float>(n, 4), {}};
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    p.y.push_back(label);
    for (int j = 0; j < 4; ++j) p.x(i, j) = static_cast<float>(rng.normal() + (j == 0 ? (label ? 2.0 : -2.0) : 0.0));
  }
  return p;
}

TrainingLog train_toy(Mlp<float>& mlp, const ToyProblem& train, const ToyProblem& val, TrainConfig cfg,
                      std::uint64_t seed) {
  Rng init(seed);
  mlp.init(init);
  auto step = [&](std::span<const std::size_t> idx, Rng& rng) {
    Mat<float> xb(static_cast<Eigen::Index>(idx.size()), 4);
    std::vector<int> yb;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      xb.row(static_cast<Eigen::Index>(k)) = train.x.row(static_cast<Eigen::Index>(idx[k]));
      yb.push_back(train.y[idx[k]]);
    }
    const auto lg = softmax_cross_entropy<float>(mlp.forward(xb, true, rng), yb);
    mlp.backward(lg.grad, false);
    return lg.loss;
  };
  auto predict = [&] { return argmax_rows<float>(mlp.infer(val.x)); };
  return fit<float>(mlp.params(), cfg, train.y, val.y, seed, step, predict);
}

}  // namespace

TEST_CASE("trainer learns, is deterministic and keeps the best weights") {
  const ToyProblem train = toy(200, 1), val = toy(60, 2);
  Mlp<float> a("toy", {4, {8}, 2, 0.2});
  Mlp<float> b("toy", {4, {8}, 2, 0.2});
  const TrainingLog la = train_toy(a, train, val, {}, 42);
  const TrainingLog lb = train_toy(b, train, val, {}, 42);
  CHECK(la.best_validation_accuracy >= 0.9);
  CHECK(la.final_train_loss == lb.final_train_loss);
  CHECK(weights_digest(a.params()) == weights_digest(b.params()));
  // Retained weights reproduce the best validation accuracy.
  const auto pred = argmax_rows<float>(a.infer(val.x));
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val.y[i];
  CHECK(static_cast<double>(correct) / static_cast<double>(pred.size()) == la.best_validation_accuracy);
  CHECK(la.epochs.size() <= 30u);
  CHECK(la.epochs.back().epoch - la.best_epoch <= 5);
}

TEST_CASE("trainer errors") {
  ToyProblem one_class = toy(10, 3);
  std::fill(one_class.y.begin(), one_class.y.end(), 1);
  Mlp<float> m("toy", {4, {8}, 2, 0.0});
  CHECK(code_of([&] { train_toy(m, one_class, one_class, {}, 1); }) == ErrorCode::DegenerateLabels);

  const ToyProblem train = toy(40, 4);
  TrainConfig huge;
  huge.adam.learning_rate = 1e30;
  ToyProblem scaled = train;
  scaled.x *= 1e30f;
  CHECK(code_of([&] { train_toy(m, scaled, train, huge, 1); }) == ErrorCode::NonFiniteLoss);
}

TEST_CASE("weights round-trip and shape checks") {
  fixtures::TempDir dir;
  Rng rng(10);
  Mlp<float> a("w", {3, {4}, 2, 0.0});
  a.init(rng);
  const auto index = save_weights(a.params(), dir.path() / "weights.bin");
  Mlp<float> b("w", {3, {4}, 2, 0.0});
  load_weights(b.params(), dir.path() / "weights.bin", index);
  CHECK(weights_digest(a.params()) == weights_digest(b.params()));
  Mlp<float> c("w", {3, {5}, 2, 0.0});
  CHECK(code_of([&] { load_weights(c.params(), dir.path() / "weights.bin", index); }) == ErrorCode::ShapeMismatch);
}
