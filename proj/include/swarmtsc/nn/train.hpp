#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmtsc/dataset.hpp"
#include "swarmtsc/nn/model.hpp"
#include "swarmtsc/rng.hpp"

namespace swarmtsc::nn {

/// Loss became NaN or infinite during training.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One split, normalized and laid out as [n * time, features] rows.
template <typename S>
struct SplitData {
  Matrix<S> x;
  Index time = 0;
  std::vector<int> tactic;
  std::vector<std::array<std::uint8_t, 2>> attributes;

  [[nodiscard]] std::size_t size() const noexcept { return tactic.size(); }
  [[nodiscard]] BatchLabels labels() const { return {tactic, attributes}; }
};

/// Gathers `rows` from the dataset and z-scores them with the dataset's
/// training statistics.
template <typename S>
SplitData<S> make_split(const Dataset& d, std::span<const std::size_t> rows) {
  FeatureTensor x = gather(d.features, rows);
  normalize(x, d.stats);
  SplitData<S> out;
  out.time = static_cast<Index>(x.time);
  out.x = Eigen::Map<const Matrix<float>>(x.data.data(), static_cast<Index>(x.instances * x.time),
                                          static_cast<Index>(x.features))
              .template cast<S>();
  for (std::size_t n : rows) {
    const TacticLabel t(d.tactics[n]);
    out.tactic.push_back(t.id());
    out.attributes.push_back(t.attributes());
  }
  return out;
}

enum class Optimizer { sgd, adam };

inline std::string_view to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

inline Optimizer parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adam") return Optimizer::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

struct TrainConfig {
  Optimizer optimizer = Optimizer::sgd;
  double learning_rate = 1e-2;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double momentum = 0.0;
  LossWeights weights{};
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    if (std::abs(weights.attribute + weights.tactic - 1.0) > 1e-12 || weights.attribute < 0 || weights.tactic < 0)
      throw std::invalid_argument("loss weights must be non-negative and sum to 1");
  }
};

/// Tracks the minimum validation loss; stops after `patience` epochs
/// without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when `loss` is a new minimum.
  bool observe(std::size_t epoch, double loss) {
    if (loss < best_) {
      best_ = loss;
      best_epoch_ = epoch;
      wait_ = 0;
      return true;
    }
    ++wait_;
    return false;
  }
  [[nodiscard]] bool should_stop() const noexcept { return wait_ >= patience_; }
  [[nodiscard]] std::size_t best_epoch() const noexcept { return best_epoch_; }
  [[nodiscard]] double best_loss() const noexcept { return best_; }

 private:
  std::size_t patience_;
  std::size_t wait_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  double train_loss = 0.0;
  LossValue val;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  LossValue best_val;
  [[nodiscard]] std::size_t epochs_trained() const noexcept { return history.size(); }
};

template <typename S>
Matrix<S> gather_rows(const SplitData<S>& d, std::span<const std::size_t> idx) {
  Matrix<S> x(static_cast<Index>(idx.size()) * d.time, d.x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x.middleRows(static_cast<Index>(k) * d.time, d.time) = d.x.middleRows(static_cast<Index>(idx[k]) * d.time, d.time);
  }
  return x;
}

template <typename S>
LossValue evaluate_loss(Model<S>& m, const SplitData<S>& d, LossWeights w = {}) {
  const auto out = predict_probabilities(m, d.x);
  return loss(out, d.labels(), m.spec().output, w);
}

/// Mini-batch SGD (optional momentum) with early stopping on validation
/// loss; the model ends with the weights of the best validation epoch.
template <typename S>
TrainResult train(Model<S>& m, const SplitData<S>& train_set, const SplitData<S>& val_set, const TrainConfig& cfg,
                  const std::function<void(std::size_t, const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.size() == 0 || val_set.size() == 0) throw std::invalid_argument("empty training or validation split");
  Rng order_rng(child_seed(cfg.seed, 2));
  Rng dropout_rng(child_seed(cfg.seed, 3));
  const ForwardContext ctx{true, &dropout_rng};

  auto params = m.parameters();
  // SGD: velocity in `first`. Adam: first and second moment estimates.
  std::vector<Matrix<S>> first, second;
  for (const auto& p : params) {
    first.push_back(Matrix<S>::Zero(p.value->rows(), p.value->cols()));
    second.push_back(Matrix<S>::Zero(p.value->rows(), p.value->cols()));
  }
  std::size_t step = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> bt;
  std::vector<std::array<std::uint8_t, 2>> ba;

  EarlyStopping stopper(cfg.patience);
  std::vector<Matrix<S>> best = snapshot(m);
  TrainResult result;
  const S lr = static_cast<S>(cfg.learning_rate), mu = static_cast<S>(cfg.momentum);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      const Matrix<S> xb = gather_rows(train_set, idx);
      bt.clear();
      ba.clear();
      for (std::size_t i : idx) {
        if (!train_set.tactic.empty()) bt.push_back(train_set.tactic[i]);
        if (!train_set.attributes.empty()) ba.push_back(train_set.attributes[i]);
      }
      const BatchLabels labels{bt, ba};
      const auto& out = m.forward(xb, ctx);
      const double l = loss(out, labels, m.spec().output, cfg.weights).combined;
      if (!std::isfinite(l)) {
        throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch + 1));
      }
      loss_sum += l * static_cast<double>(idx.size());
      m.backward(labels, cfg.weights);
      ++step;
      if (cfg.optimizer == Optimizer::adam) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-7;
        const double t = static_cast<double>(step);
        const S alpha = static_cast<S>(cfg.learning_rate * std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t)));
        for (std::size_t i = 0; i < params.size(); ++i) {
          const auto& g = *params[i].grad;
          first[i] = S(b1) * first[i] + S(1 - b1) * g;
          second[i] = S(b2) * second[i] + S(1 - b2) * g.cwiseAbs2();
          params[i].value->array() -= alpha * first[i].array() / (second[i].array().sqrt() + S(eps));
        }
      } else {
        for (std::size_t i = 0; i < params.size(); ++i) {
          if (mu > S(0)) {
            first[i] = mu * first[i] - lr * *params[i].grad;
            *params[i].value += first[i];
          } else {
            *params[i].value -= lr * *params[i].grad;
          }
        }
      }
    }
    EpochRecord rec{loss_sum / static_cast<double>(order.size()), evaluate_loss(m, val_set, cfg.weights)};
    if (!std::isfinite(rec.val.combined)) {
      throw TrainingDiverged("validation loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(epoch, rec);
    if (stopper.observe(epoch, rec.val.combined)) {
      best = snapshot(m);
      result.best_epoch = epoch;
      result.best_val = rec.val;
    }
    if (stopper.should_stop()) break;
  }
  restore(m, best);
  return result;
}

}  // namespace swarmtsc::nn
