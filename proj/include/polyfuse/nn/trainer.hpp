#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyfuse/core/error.hpp"
#include "polyfuse/core/rng.hpp"
#include "polyfuse/nn/adam.hpp"

namespace polyfuse::nn {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 30;
  int patience = 5;  // epochs without validation improvement before stopping
  AdamConfig adam;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;  // fraction; NaN when no validation data
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
  double final_train_loss = 0.0;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainingLog& log);

/// Throws DegenerateLabels unless both classes occur.
void require_two_classes(std::span<const int> labels);

/// Runs mini-batch training with best-validation weight retention.
///
/// loss_and_grad(batch indices, rng) must run forward + backward for the batch
/// and return the mean loss; gradients accumulate in the params.
/// predict_validation() returns predicted labels for the validation examples.
/// Without validation labels the last epoch's weights are kept.
template <class S>
TrainingLog fit(const ParamList<S>& params, const TrainConfig& config, std::span<const int> train_labels,
                std::span<const int> validation_labels, std::uint64_t seed,
                const std::function<S(std::span<const std::size_t>, Rng&)>& loss_and_grad,
                const std::function<std::vector<int>()>& predict_validation) {
  require_two_classes(train_labels);
  Rng rng(seed);
  Adam<S> optimizer(params, config.adam);
  optimizer.zero_grad();

  std::vector<std::size_t> order(train_labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Mat<S>> best;
  TrainingLog log;
  log.best_validation_accuracy = -1.0;
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(std::max(1, config.batch_size));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const S loss = loss_and_grad(std::span<const std::size_t>(order.data() + start, n), rng);
      if (!std::isfinite(static_cast<double>(loss)))
        throw Error(ErrorCode::NonFiniteLoss,
                    "loss became non-finite at epoch " + std::to_string(epoch) + ", batch starting at " +
                        std::to_string(start) + " (learning rate " + std::to_string(config.adam.learning_rate) + ")");
      optimizer.step();
      loss_sum += static_cast<double>(loss) * static_cast<double>(n);
      seen += n;
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1)),
                   std::numeric_limits<double>::quiet_NaN()};
    log.final_train_loss = entry.train_loss;
    if (!validation_labels.empty()) {
      const std::vector<int> predicted = predict_validation();
      std::size_t correct = 0;
      for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == validation_labels[i] ? 1 : 0;
      entry.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation_labels.size());
      if (entry.validation_accuracy > log.best_validation_accuracy) {
        log.best_validation_accuracy = entry.validation_accuracy;
        log.best_epoch = epoch;
        since_best = 0;
        best.clear();
        for (const Param<S>* p : params) best.push_back(p->value);
      } else {
        ++since_best;
      }
    } else {
      log.best_epoch = epoch;
    }
    log.epochs.push_back(entry);
    if (!validation_labels.empty() && since_best >= config.patience) break;
  }
  if (!best.empty())
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = std::move(best[k]);
  if (log.best_validation_accuracy < 0.0) log.best_validation_accuracy = std::numeric_limits<double>::quiet_NaN();
  return log;
}

}  // namespace polyfuse::nn
