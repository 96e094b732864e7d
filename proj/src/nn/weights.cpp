#include "polyfuse/nn/weights.hpp"

#include <bit>
#include <cstring>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/hash.hpp"
#include "polyfuse/core/tensor_file.hpp"
#include "polyfuse/nn/trainer.hpp"

namespace polyfuse::nn {

static_assert(std::endian::native == std::endian::little, "weights files are little-endian float32");

nlohmann::json save_weights(const ParamList<float>& params, const std::filesystem::path& file) {
  nlohmann::json index = nlohmann::json::array();
  std::string bytes;
  for (const Param<float>* p : params) {
    index.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"offset", bytes.size()}});
    bytes.append(reinterpret_cast<const char*>(p->value.data()), static_cast<std::size_t>(p->size()) * sizeof(float));
  }
  write_file_atomic(file, bytes);
  return index;
}

void load_weights(const ParamList<float>& params, const std::filesystem::path& file, const nlohmann::json& index) {
  if (index.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "weights index has " + std::to_string(index.size()) + " tensors, model has " +
                                              std::to_string(params.size()));
  const std::string bytes = read_file(file);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param<float>& p = *params[k];
    const auto& e = index[k];
    if (e.at("name").get<std::string>() != p.name || e.at("rows").get<Eigen::Index>() != p.value.rows() ||
        e.at("cols").get<Eigen::Index>() != p.value.cols())
      throw Error(ErrorCode::ShapeMismatch,
                  "weights entry " + e.at("name").get<std::string>() + " does not match " + p.name);
    const auto offset = e.at("offset").get<std::size_t>();
    const std::size_t n = static_cast<std::size_t>(p.size()) * sizeof(float);
    if (offset + n > bytes.size()) throw Error(ErrorCode::ShapeMismatch, "weights file truncated at " + p.name);
    std::memcpy(p.value.data(), bytes.data() + offset, n);
    p.grad.setZero();
  }
}

std::string weights_digest(const ParamList<float>& params) {
  Sha256 h;
  for (const Param<float>* p : params) h.update(p->value.data(), static_cast<std::size_t>(p->size()) * sizeof(float));
  return h.hex();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"patience", c.patience},
          {"optimizer", "adam"},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.patience = j.value("patience", c.patience);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  return c;
}

nlohmann::json to_json(const TrainingLog& log) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochLog& e : log.epochs)
    epochs.push_back(
        {{"epoch", e.epoch}, {"train_loss", num(e.train_loss)}, {"validation_accuracy", num(e.validation_accuracy)}});
  return {{"epochs", epochs},
          {"best_epoch", log.best_epoch},
          {"best_validation_accuracy", num(log.best_validation_accuracy)},
          {"final_train_loss", num(log.final_train_loss)}};
}

void require_two_classes(std::span<const int> labels) {
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::ValidationError, "class labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1])
    throw Error(ErrorCode::DegenerateLabels,
                "training labels contain a single class (" + std::to_string(labels.size()) + " examples)");
}

}  // namespace polyfuse::nn
