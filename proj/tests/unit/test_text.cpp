#include <doctest.h>

#include <fstream>

#include "error_capture.hpp"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "polyfuse/text/bow.hpp"
#include "polyfuse/text/embedding.hpp"
#include "polyfuse/text/text_model.hpp"
#include "polyfuse/text/tokenizer.hpp"

using namespace polyfuse;
using namespace polyfuse::text;
using fixtures::code_of;

namespace {

EmbeddingTable small_table(int dim, const std::vector<std::string>& words, Rng& rng) {
  EmbeddingTable t;
  t.matrix.resize(static_cast<Eigen::Index>(words.size()), dim);
  for (std::size_t i = 0; i < words.size(); ++i) {
    t.vocabulary.emplace(words[i], static_cast<std::int64_t>(i));
    for (int k = 0; k < dim; ++k) t.matrix(static_cast<Eigen::Index>(i), k) = static_cast<float>(rng.normal());
  }
  return t;
}

// Random sequences whose class is the sign of the mean row sum.
struct TextSet {
  std::vector<TextTensor> x;
  std::vector<int> y;
};

TextSet separable_set(int n, int window, int dim, Rng& rng) {
  TextSet s;
  while (static_cast<int>(s.x.size()) < n) {
    const int len = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(window)));
    nn::Mat<float> v = nn::Mat<float>::Zero(window, dim);
    const double shift = rng.bernoulli(0.5) ? 0.5 : -0.5;
    for (int r = 0; r < len; ++r)
      for (int c = 0; c < dim; ++c) v(r, c) = static_cast<float>(rng.normal() * 0.5 + shift);
    const double mean_row_sum = v.topRows(len).sum() / len;
    if (std::abs(mean_row_sum) < 0.5) continue;
    s.y.push_back(mean_row_sum > 0 ? 1 : 0);
    s.x.push_back(text_tensor_from_values(std::move(v), len));
  }
  return s;
}

}  // namespace

TEST_CASE("tokenizer examples") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("good movie!") == std::vector<std::string>{"good", "movie"});
  CHECK(tokenize("این فیلم عالی") .size() == 3);
}

TEST_CASE("embedding file parsing") {
  fixtures::TempDir dir;
  const auto file = dir.path() / "vectors.vec";
  {
    std::ofstream out(file);
    out << "3 4\n";
    out << "good 1 2 3 4\n";
    out << "Bad -1 -2 -3 -4\n";
    out << "good 9 9 9 9\n";
    out << "كتاب 0.5 0.5 0.5 0.5\n";
  }
  const EmbeddingTable t = load_embeddings(file, 4);
  CHECK(t.size() == 3);
  CHECK(t.dim() == 4);
  REQUIRE(t.find("good") != nullptr);
  CHECK(t.find("good")[0] == 1.0f);
  CHECK(t.find("bad") != nullptr);
  // Arabic Kaf and Yeh normalize to the Persian letters the tokenizer emits.
  CHECK(t.find(tokenize("كتاب").front()) != nullptr);

  {
    std::ofstream out(file);
    out << "word 1 2 3\n";
  }
  CHECK(code_of([&] { load_embeddings(file, 4); }) == ErrorCode::ValidationError);
  {
    std::ofstream out(file);
    out << "word 1 2 nan 4\n";
  }
  CHECK(code_of([&] { load_embeddings(file, 4); }) == ErrorCode::ValidationError);
  CHECK(code_of([&] { load_embeddings(dir.path() / "missing.vec", 4); }) == ErrorCode::IoError);
}

TEST_CASE("embed_sequence shapes and padding") {
  Rng rng(1);
  const EmbeddingTable table = small_table(kEmbeddingDim, {"a", "b"}, rng);
  const TextTensor empty = embed_sequence({}, table);
  CHECK(empty.values.rows() == 60);
  CHECK(empty.values.cols() == 300);
  CHECK(empty.values.isZero());
  CHECK(empty.length() == 0);

  const TextTensor one = embed_sequence({"b"}, table);
  CHECK(one.values.row(0) == table.matrix.row(1));
  CHECK(one.values.bottomRows(59).isZero());
  CHECK(one.length() == 1);

  std::vector<std::string> long_seq(70, "a");
  long_seq[3] = "unknown";
  const TextTensor trimmed = embed_sequence(long_seq, table);
  CHECK(trimmed.values.rows() == 60);
  CHECK(trimmed.length() == 60);
  CHECK(trimmed.values.row(3).isZero());
  CHECK(trimmed.values.row(59) == table.matrix.row(0));

  for (int n = 0; n < 100; n += 7) {
    const TextTensor t = embed_sequence(std::vector<std::string>(static_cast<std::size_t>(n), "a"), table);
    CHECK(t.values.rows() == 60);
    CHECK(t.length() == std::min(n, 60));
    CHECK(t.values.bottomRows(60 - t.length()).isZero());
  }
}

TEST_CASE("text network gradient check on a three-token toy model") {
  TextModelConfig c;
  c.recurrent = {3, 2};
  c.dense = {4};
  c.dropout = 0.0;
  c.window = 3;
  c.embedding_dim = 4;
  TextNet<double> net(c);
  Rng rng(2);
  net.init(rng);
  std::vector<TextTensor> items;
  for (int len : {3, 2}) {
    nn::Mat<float> v = nn::Mat<float>::Zero(3, 4);
    for (int r = 0; r < len; ++r)
      for (int k = 0; k < 4; ++k) v(r, k) = static_cast<float>(rng.normal());
    items.push_back(text_tensor_from_values(std::move(v), len));
  }
  std::vector<const TextTensor*> ptrs = {&items[0], &items[1]};
  auto [xs, mask] = make_text_batch<double>(ptrs, 3, 4);
  const std::vector<int> y = {1, 0};
  Rng unused(0);
  const auto lg = nn::softmax_cross_entropy<double>(net.forward(xs, mask, true, unused), y);
  net.backward(lg.grad);
  const auto loss = [&] { return nn::softmax_cross_entropy<double>(net.infer(xs, mask), y).loss; };
  const auto r = fixtures::gradient_check(net.params(), loss);
  CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_param);
  CHECK(r.checked > 50);
}

TEST_CASE("text classifier learns a separable set and is deterministic") {
  Rng rng(3);
  const int window = 12, dim = 10;
  const TextSet train = separable_set(160, window, dim, rng);
  const TextSet val = separable_set(60, window, dim, rng);
  TextModelConfig c;
  c.recurrent = {16, 8};
  c.dense = {16};
  c.window = window;
  c.embedding_dim = dim;
  TextClassifier a(c), b(c);
  const auto log_a = a.train(train.x, train.y, val.x, val.y, {}, 5);
  const auto log_b = b.train(train.x, train.y, val.x, val.y, {}, 5);
  CHECK(log_a.best_validation_accuracy >= 0.95);
  CHECK(log_a.final_train_loss == log_b.final_train_loss);
  CHECK(a.weights_digest() == b.weights_digest());

  const auto probs = a.predict(val.x);
  int correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    CHECK(probs[i].negative + probs[i].positive == doctest::Approx(1.0).epsilon(1e-6));
    correct += probs[i].label() == val.y[i];
  }
  CHECK(correct >= 57);
  CHECK(a.penultimate(val.x).rows() == 60);
  CHECK(a.penultimate(val.x).cols() == 16);

  fixtures::TempDir dir;
  a.save(dir.path() / "model");
  TextClassifier loaded = TextClassifier::load(dir.path() / "model");
  CHECK(loaded.weights_digest() == a.weights_digest());
  CHECK(loaded.predict(val.x) == probs);
}

TEST_CASE("default text classifier shapes and errors") {
  TextClassifier model;
  CHECK(model.config().recurrent == std::vector<int>{128, 64});
  CHECK(TextModelConfig::uniform_128().recurrent == std::vector<int>{128, 128});
  const TextTensor zero = text_tensor_from_values(nn::Mat<float>::Zero(60, 300), 0);
  const auto p = model.predict(std::vector<TextTensor>{zero});
  CHECK(std::isfinite(p[0].positive));
  CHECK(p[0].negative + p[0].positive == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(model.penultimate(std::vector<TextTensor>{zero}).cols() == 128);
  const TextTensor wrong = text_tensor_from_values(nn::Mat<float>::Zero(60, 200), 0);
  CHECK(code_of([&] { model.predict(std::vector<TextTensor>{wrong}); }) == ErrorCode::ShapeMismatch);

  std::vector<TextTensor> xs(4, zero);
  const std::vector<int> same = {1, 1, 1, 1};
  CHECK(code_of([&] { model.train(xs, same, {}, {}, {}, 1); }) == ErrorCode::DegenerateLabels);
}

TEST_CASE("bag-of-words baselines") {
  std::vector<std::vector<std::string>> docs;
  std::vector<int> y;
  Rng rng(4);
  const std::vector<std::string> filler = {"the", "movie", "was", "this", "actor", "film"};
  for (int i = 0; i < 80; ++i) {
    std::vector<std::string> d;
    for (int k = 0; k < 4; ++k) d.push_back(filler[rng.index(filler.size())]);
    const int label = i % 2;
    d.insert(d.begin() + static_cast<long>(rng.index(d.size())), label ? "great" : "awful");
    docs.push_back(d);
    y.push_back(label);
  }
  for (BowKind kind : {BowKind::linear_margin, BowKind::logistic}) {
    const BowModel m = BowModel::train(docs, y, kind, 7);
    int correct = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) correct += m.predict(docs[i]).label() == y[i];
    CHECK(correct == 80);
    const ProbabilityPair empty = m.predict({});
    CHECK(empty.negative + empty.positive == doctest::Approx(1.0));
    const BowModel back = BowModel::from_json(m.to_json());
    CHECK(back.decision(docs[3]) == m.decision(docs[3]));
  }
  CHECK(code_of([&] { BowModel::train(docs, std::vector<int>(80, 0), BowKind::logistic, 1); }) ==
        ErrorCode::DegenerateLabels);
}
