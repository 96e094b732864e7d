#include "polyfuse/fusion/fusion.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "polyfuse/core/error.hpp"
#include "polyfuse/nn/artifact.hpp"

namespace polyfuse::fusion {

namespace {

std::string dim_text(Eigen::Index n) { return std::to_string(n); }

void check_width(Modality m, Eigen::Index got, const BlockDims& expected) {
  const auto it = expected.find(m);
  if (it != expected.end() && it->second != got)
    throw Error(ErrorCode::DimMismatch, std::string(name(m)) + " features have " + dim_text(got) +
                                            " values, registered width is " + dim_text(it->second));
}

nlohmann::json layout_json(const std::vector<Block>& layout) {
  nlohmann::json out = nlohmann::json::array();
  for (const Block& b : layout)
    out.push_back({{"modality", std::string(name(b.modality))}, {"offset", b.offset}, {"length", b.length}});
  return out;
}

double logistic(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

void check_distribution(Modality m, const ProbabilityPair& p) {
  if (!std::isfinite(p.negative) || !std::isfinite(p.positive) || p.negative < 0.0 || p.positive < 0.0 ||
      std::abs(p.negative + p.positive - 1.0) > 1e-6)
    throw Error(ErrorCode::ValidationError, std::string(name(m)) + " prediction is not a distribution");
}

}  // namespace

FusedFeatureVector early_fuse(const FeatureMap& features, ModalitySet set, const BlockDims& expected) {
  FusedFeatureVector out;
  for (Modality m : set.members()) {
    const auto it = features.find(m);
    if (it == features.end())
      throw Error(ErrorCode::MissingModality, "no " + std::string(name(m)) + " features for set " + set.to_string());
    const auto length = static_cast<Eigen::Index>(it->second.size());
    check_width(m, length, expected);
    out.layout.push_back({m, static_cast<Eigen::Index>(out.values.size()), length});
    out.values.insert(out.values.end(), it->second.begin(), it->second.end());
  }
  return out;
}

nn::Mat<float> early_fuse_rows(const FeatureMatrices& features, ModalitySet set, const BlockDims& expected,
                               std::vector<Block>* layout) {
  std::vector<Block> blocks;
  Eigen::Index rows = -1;
  Eigen::Index total = 0;
  for (Modality m : set.members()) {
    const auto it = features.find(m);
    if (it == features.end())
      throw Error(ErrorCode::MissingModality, "no " + std::string(name(m)) + " features for set " + set.to_string());
    check_width(m, it->second.cols(), expected);
    if (rows >= 0 && it->second.rows() != rows)
      throw Error(ErrorCode::LengthMismatch, std::string(name(m)) + " features cover " + dim_text(it->second.rows()) +
                                                 " utterances, expected " + dim_text(rows));
    rows = it->second.rows();
    blocks.push_back({m, total, it->second.cols()});
    total += it->second.cols();
  }
  nn::Mat<float> out(rows, total);
  for (const Block& b : blocks) out.middleCols(b.offset, b.length) = features.at(b.modality);
  if (layout != nullptr) *layout = std::move(blocks);
  return out;
}

DecisionVector late_fuse(const PredictionMap& predictions, ModalitySet set) {
  DecisionVector out{set, {}};
  for (Modality m : set.members()) {
    const auto it = predictions.find(m);
    if (it == predictions.end())
      throw Error(ErrorCode::MissingModality, "no " + std::string(name(m)) + " prediction for set " + set.to_string());
    check_distribution(m, it->second);
    out.values.push_back(it->second.negative);
    out.values.push_back(it->second.positive);
  }
  return out;
}

Standardizer Standardizer::fit(const nn::Mat<float>& rows) {
  if (rows.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit a standardizer on zero rows");
  Standardizer s;
  const Eigen::MatrixXd x = rows.cast<double>();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().mean();
    s.mean.push_back(mean);
    s.scale.push_back(var > 1e-12 ? std::sqrt(var) : 1.0);
  }
  return s;
}

nn::Mat<float> Standardizer::apply(const nn::Mat<float>& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != mean.size())
    throw Error(ErrorCode::DimMismatch,
                "standardizer fitted on " + std::to_string(mean.size()) + " columns, got " + dim_text(rows.cols()));
  nn::Mat<float> out(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const auto k = static_cast<std::size_t>(c);
      out(r, c) = static_cast<float>((rows(r, c) - mean[k]) / scale[k]);
    }
  return out;
}

nlohmann::json Standardizer::to_json() const { return {{"mean", mean}, {"scale", scale}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw Error(ErrorCode::ValidationError, "standardizer arrays differ in length");
  return s;
}

nn::MlpClassifierConfig EarlyFusionModel::default_head() { return {{128, 32}, 0.2, false}; }

namespace {

Eigen::Index fused_width(ModalitySet set, const BlockDims& dims) {
  if (set.empty()) throw Error(ErrorCode::ValidationError, "modality set is empty");
  Eigen::Index total = 0;
  for (Modality m : set.members()) {
    const auto it = dims.find(m);
    if (it == dims.end())
      throw Error(ErrorCode::MissingModality, "no registered width for " + std::string(name(m)));
    total += it->second;
  }
  return total;
}

}  // namespace

EarlyFusionModel::EarlyFusionModel(ModalitySet set, BlockDims dims, nn::MlpClassifierConfig head)
    : set_(set), head_("early", std::move(head), fused_width(set, dims)) {
  Eigen::Index offset = 0;
  for (Modality m : set.members()) {
    dims_[m] = dims.at(m);
    layout_.push_back({m, offset, dims_[m]});
    offset += dims_[m];
  }
}

void EarlyFusionModel::check_set(ModalitySet given) const {
  if (given != set_)
    throw Error(ErrorCode::SetMismatch,
                "early model for " + set_.to_string() + " queried with " + (given.empty() ? "nothing" : given.to_string()));
}

namespace {

template <class Map>
ModalitySet set_of(const Map& m) {
  ModalitySet s;
  for (const auto& entry : m) s.insert(entry.first);
  return s;
}

}  // namespace

nn::TrainingLog EarlyFusionModel::train(const FeatureMatrices& train, std::span<const int> labels,
                                        const FeatureMatrices& validation, std::span<const int> validation_labels,
                                        const nn::TrainConfig& train_config, std::uint64_t seed) {
  check_set(set_of(train));
  const nn::Mat<float> x = early_fuse_rows(train, set_, dims_);
  standardizer_ = Standardizer::fit(x);
  nn::Mat<float> v(0, x.cols());
  if (!validation.empty()) {
    check_set(set_of(validation));
    v = standardizer_.apply(early_fuse_rows(validation, set_, dims_));
  }
  return head_.train(standardizer_.apply(x), labels, v, validation_labels, train_config, seed);
}

std::vector<FusedPrediction> EarlyFusionModel::predict(const FeatureMatrices& features) const {
  check_set(set_of(features));
  if (standardizer_.mean.empty()) throw Error(ErrorCode::ValidationError, "early model has not been trained");
  std::vector<FusedPrediction> out;
  for (const auto& p : head_.predict(standardizer_.apply(early_fuse_rows(features, set_, dims_))))
    out.push_back({p, eval::FusionStrategy::early, set_});
  return out;
}

FusedPrediction EarlyFusionModel::predict(const FeatureMap& features) const {
  check_set(set_of(features));
  FeatureMatrices rows;
  for (const auto& [m, v] : features)
    rows[m] = Eigen::Map<const nn::Mat<float>>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
  return predict(rows).front();
}

void EarlyFusionModel::save(const std::filesystem::path& dir, const nlohmann::json& extra) {
  nlohmann::json manifest = extra;
  manifest["fusion"] = "early";
  manifest["modality_set"] = set_.to_string();
  manifest["block_layout"] = layout_json(layout_);
  manifest["standardizer"] = standardizer_.to_json();
  head_.save(dir, manifest);
}

EarlyFusionModel EarlyFusionModel::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = nn::read_artifact_manifest(dir, "early");
  BlockDims dims;
  for (const auto& b : manifest.at("block_layout"))
    dims[parse_modality(b.at("modality").get<std::string>())] = b.at("length").get<Eigen::Index>();
  nn::MlpClassifier head = nn::MlpClassifier::load(dir, "early");
  EarlyFusionModel model(ModalitySet::parse(manifest.at("modality_set").get<std::string>()), dims, head.config());
  model.head_ = std::move(head);
  model.standardizer_ = Standardizer::from_json(manifest.at("standardizer"));
  return model;
}

nlohmann::json MetaConfig::to_json() const {
  return {{"kind", "logistic"}, {"l2", l2}, {"max_iterations", max_iterations}};
}

MetaConfig MetaConfig::from_json(const nlohmann::json& j) {
  MetaConfig c;
  c.l2 = j.value("l2", c.l2);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  return c;
}

LateFusionModel::LateFusionModel(ModalitySet set, MetaConfig config) : set_(set), config_(config) {
  if (set.empty()) throw Error(ErrorCode::ValidationError, "modality set is empty");
}

void LateFusionModel::train(const PredictionLists& validation_predictions, std::span<const int> labels) {
  for (Modality m : set_.members())
    if (!validation_predictions.contains(m))
      throw Error(ErrorCode::UntrainedUnimodal,
                  "late fusion over " + set_.to_string() + " needs a trained " + std::string(name(m)) + " model");
  if (is_identity()) {
    trained_ = true;
    return;
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "late fusion needs validation predictions");
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto members = set_.members();
  const auto k = static_cast<Eigen::Index>(2 * members.size());
  // Design matrix: decision vector then a constant column for the intercept.
  Eigen::MatrixXd x(n, k + 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    PredictionMap row;
    for (Modality m : members) {
      const auto& list = validation_predictions.at(m);
      if (static_cast<Eigen::Index>(list.size()) != n)
        throw Error(ErrorCode::LengthMismatch, std::string(name(m)) + " predictions do not match the label count");
      row[m] = list[static_cast<std::size_t>(r)];
    }
    const DecisionVector d = late_fuse(row, set_);
    for (Eigen::Index c = 0; c < k; ++c) x(r, c) = d.values[static_cast<std::size_t>(c)];
    x(r, k) = 1.0;
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) y(r) = labels[static_cast<std::size_t>(r)] == 1 ? 1.0 : 0.0;

  // Newton iterations on the L2-penalized log-likelihood; the intercept is not penalized.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(k + 1, config_.l2 * static_cast<double>(n));
  penalty(k) = 0.0;
  for (int it = 0; it < config_.max_iterations; ++it) {
    const Eigen::VectorXd z = x * w;
    Eigen::VectorXd p(n), s(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      p(r) = logistic(z(r));
      s(r) = std::max(p(r) * (1.0 - p(r)), 1e-10);
    }
    const Eigen::VectorXd g = x.transpose() * (p - y) + penalty.cwiseProduct(w);
    Eigen::MatrixXd h = x.transpose() * s.asDiagonal() * x;
    h.diagonal() += penalty;
    h.diagonal().array() += 1e-9;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    w -= step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  if (!w.allFinite()) throw Error(ErrorCode::NonFiniteLoss, "late fusion meta-classifier diverged");
  coefficients_.assign(w.data(), w.data() + k);
  intercept_ = w(k);
  trained_ = true;
}

FusedPrediction LateFusionModel::predict(const PredictionMap& predictions) const {
  if (set_of(predictions) != set_)
    throw Error(ErrorCode::SetMismatch, "late model for " + set_.to_string() + " queried with " +
                                            (predictions.empty() ? "nothing" : set_of(predictions).to_string()));
  if (!trained_) throw Error(ErrorCode::UntrainedUnimodal, "late model has not been trained");
  const DecisionVector d = late_fuse(predictions, set_);
  if (is_identity()) return {{d.values[0], d.values[1]}, eval::FusionStrategy::late, set_};
  double z = intercept_;
  for (std::size_t c = 0; c < d.values.size(); ++c) z += coefficients_[c] * d.values[c];
  const double p = logistic(z);
  return {{1.0 - p, p}, eval::FusionStrategy::late, set_};
}

std::vector<FusedPrediction> LateFusionModel::predict(const PredictionLists& predictions) const {
  std::size_t n = 0;
  if (!predictions.empty()) n = predictions.begin()->second.size();
  std::vector<FusedPrediction> out;
  for (std::size_t i = 0; i < n; ++i) {
    PredictionMap row;
    for (const auto& [m, list] : predictions) {
      if (list.size() != n) throw Error(ErrorCode::LengthMismatch, "prediction lists differ in length");
      row[m] = list[i];
    }
    out.push_back(predict(row));
  }
  return out;
}

void LateFusionModel::save(const std::filesystem::path& dir, const nlohmann::json& extra) const {
  if (!trained_) throw Error(ErrorCode::UntrainedUnimodal, "late model has not been trained");
  nlohmann::json manifest = extra;
  manifest["kind"] = "late";
  manifest["fusion"] = "late";
  manifest["modality_set"] = set_.to_string();
  manifest["meta_config"] = is_identity() ? nlohmann::json{{"kind", "identity"}} : config_.to_json();
  manifest["coefficients"] = coefficients_;
  manifest["intercept"] = intercept_;
  nn::save_artifact(dir, manifest, {});
}

LateFusionModel LateFusionModel::load(const std::filesystem::path& dir) {
  const nlohmann::json manifest = nn::read_artifact_manifest(dir, "late");
  LateFusionModel model(ModalitySet::parse(manifest.at("modality_set").get<std::string>()),
                        MetaConfig::from_json(manifest.at("meta_config")));
  model.coefficients_ = manifest.at("coefficients").get<std::vector<double>>();
  model.intercept_ = manifest.at("intercept").get<double>();
  if (!model.is_identity() && model.coefficients_.size() != 2 * model.set_.size())
    throw Error(ErrorCode::ShapeMismatch, "late model coefficients do not match its modality set");
  model.trained_ = true;
  return model;
}

}  // namespace polyfuse::fusion
