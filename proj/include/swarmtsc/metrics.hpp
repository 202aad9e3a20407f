#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmtsc/nn/model.hpp"
#include "swarmtsc/nn/train.hpp"

namespace swarmtsc {

/// Accuracy shifted by the random-guess rate 1/n_classes, and the error rate
/// normalized so that 0 is perfect and 1 is random guessing.
struct AccuracyMetrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double random_accuracy = 0.0;
  double adjusted = 0.0;
  double normalized_error = 0.0;
};

inline AccuracyMetrics accuracy_from(double accuracy, int n_classes, std::size_t count = 0) {
  if (n_classes < 2) throw std::invalid_argument("need at least two classes");
  AccuracyMetrics m;
  m.count = count;
  m.accuracy = accuracy;
  m.random_accuracy = 1.0 / n_classes;
  m.adjusted = accuracy - m.random_accuracy;
  m.normalized_error = 1.0 - m.adjusted / (1.0 - m.random_accuracy);
  return m;
}

template <typename T>
AccuracyMetrics accuracy_metrics(std::span<const T> predictions, std::span<const T> labels, int n_classes) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("prediction and label counts differ");
  if (predictions.empty()) throw std::invalid_argument("no predictions to score");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i] ? 1 : 0;
  return accuracy_from(static_cast<double>(correct) / static_cast<double>(labels.size()), n_classes, labels.size());
}

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  int n = 0;
  std::vector<std::size_t> counts;

  [[nodiscard]] std::size_t at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth * n + predicted)];
  }
  [[nodiscard]] std::size_t trace() const {
    std::size_t t = 0;
    for (int i = 0; i < n; ++i) t += at(i, i);
    return t;
  }
  [[nodiscard]] std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  [[nodiscard]] std::size_t row_sum(int truth) const {
    std::size_t t = 0;
    for (int j = 0; j < n; ++j) t += at(truth, j);
    return t;
  }
};

template <typename T>
ConfusionMatrix confusion(std::span<const T> predictions, std::span<const T> labels, int n) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("prediction and label counts differ");
  ConfusionMatrix m{n, std::vector<std::size_t>(static_cast<std::size_t>(n * n), 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = static_cast<int>(labels[i]), p = static_cast<int>(predictions[i]);
    if (t < 0 || t >= n || p < 0 || p >= n) throw std::out_of_range("label outside confusion matrix");
    ++m.counts[static_cast<std::size_t>(t * n + p)];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Model evaluation

/// Fills whichever head a single-output model lacks from the one it has: a
/// tactic softmax implies attribute marginals P(comms) = p2 + p3 and
/// P(pronav) = p1 + p3; attribute sigmoids imply tactic probabilities as a
/// product of independent bits.
template <typename S>
nn::HeadOutputs<S> complete_heads(const nn::HeadOutputs<S>& out) {
  nn::HeadOutputs<S> full = out;
  const auto n = std::max(out.tactic.rows(), out.attributes.rows());
  if (out.attributes.rows() == 0 && out.tactic.rows() > 0) {
    full.attributes.resize(n, 2);
    full.attributes.col(0) = out.tactic.col(2) + out.tactic.col(3);
    full.attributes.col(1) = out.tactic.col(1) + out.tactic.col(3);
  } else if (out.tactic.rows() == 0 && out.attributes.rows() > 0) {
    full.tactic.resize(n, TacticLabel::kCount);
    for (nn::Index b = 0; b < n; ++b) {
      const S c = out.attributes(b, 0), p = out.attributes(b, 1);
      full.tactic.row(b) << (1 - c) * (1 - p), (1 - c) * p, c * (1 - p), c * p;
    }
  }
  return full;
}

struct HeadReport {
  std::string head;  // "tactic", "comms" or "pronav"
  bool derived = false;
  AccuracyMetrics metrics;
  ConfusionMatrix confusion;
  double loss = 0.0;  // categorical for tactic, binary for an attribute
};

struct Evaluation {
  std::array<HeadReport, 3> heads;
  /// Losses of the completed heads; `combined` uses the multihead weighting.
  nn::LossValue loss;
  nn::Predictions predictions;

  [[nodiscard]] const HeadReport& tactic() const { return heads[0]; }
  [[nodiscard]] const HeadReport& comms() const { return heads[1]; }
  [[nodiscard]] const HeadReport& pronav() const { return heads[2]; }
};

/// Scores a model on one split. Single-output models are scored on all three
/// heads via complete_heads(); a multilabel model's tactic prediction is the
/// bit pattern 2*comms + pronav.
template <typename S>
Evaluation evaluate(nn::Model<S>& m, const nn::SplitData<S>& data, nn::LossWeights w = {}) {
  const auto raw = nn::predict_probabilities(m, data.x);
  const auto full = complete_heads(raw);
  const OutputKind kind = m.spec().output;
  Evaluation e;
  e.loss = nn::loss(full, data.labels(), OutputKind::multihead, w);
  e.predictions = nn::decide(full);
  if (kind == OutputKind::multilabel) {
    for (std::size_t i = 0; i < e.predictions.tactic.size(); ++i) {
      const auto& a = e.predictions.attributes[i];
      e.predictions.tactic[i] = 2 * a[0] + a[1];
    }
  }
  const auto& pt = e.predictions.tactic;
  e.heads[0] = {"tactic", kind == OutputKind::multilabel,
                accuracy_metrics<int>(pt, data.tactic, TacticLabel::kCount),
                confusion<int>(pt, data.tactic, TacticLabel::kCount), e.loss.categorical};
  for (int k = 0; k < 2; ++k) {
    std::vector<int> pred, truth;
    for (std::size_t i = 0; i < data.size(); ++i) {
      pred.push_back(e.predictions.attributes[i][static_cast<std::size_t>(k)]);
      truth.push_back(data.attributes[i][static_cast<std::size_t>(k)]);
    }
    double bce = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double p = std::clamp(static_cast<double>(full.attributes(static_cast<nn::Index>(i), k)),
                                  nn::kProbabilityClip, 1.0 - nn::kProbabilityClip);
      bce -= truth[i] ? std::log(p) : std::log(1.0 - p);
    }
    bce /= static_cast<double>(truth.size());
    e.heads[static_cast<std::size_t>(k + 1)] = {k == 0 ? "comms" : "pronav", kind == OutputKind::multiclass,
                                                accuracy_metrics<int>(pred, truth, 2), confusion<int>(pred, truth, 2),
                                                bce};
  }
  return e;
}

/// Everything reported for one trained model.
struct MetricsReport {
  Evaluation test;
  Evaluation validation;
  double val_loss_min = 0.0;
  std::size_t epochs_trained = 0;
  std::size_t best_epoch = 0;
  std::size_t parameters = 0;
};

}  // namespace swarmtsc
