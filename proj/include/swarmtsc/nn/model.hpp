#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmtsc/container.hpp"
#include "swarmtsc/dataset.hpp"
#include "swarmtsc/nn/layers.hpp"
#include "swarmtsc/rng.hpp"

namespace swarmtsc::nn {

enum class Architecture { logreg, fc, cnn, fcn, custom };

inline std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::logreg: return "logreg";
    case Architecture::fc: return "fc";
    case Architecture::cnn: return "cnn";
    case Architecture::fcn: return "fcn";
    case Architecture::custom: return "custom";
  }
  return "?";
}

inline Architecture parse_architecture(std::string_view s) {
  for (auto a : {Architecture::logreg, Architecture::fc, Architecture::cnn, Architecture::fcn}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

struct ModelSpec {
  Architecture arch = Architecture::fcn;
  OutputKind output = OutputKind::multihead;
  /// Multihead only: append the attribute probabilities to the tactic head's
  /// input.
  bool attribute_concat = true;
  Index time_steps = 0;
  Index features = 0;
};

/// Attribute loss weight 0.8, tactic 0.2. Only the multihead loss mixes them.
struct LossWeights {
  double attribute = 0.8;
  double tactic = 0.2;
};

struct LossValue {
  double categorical = 0.0;
  double binary = 0.0;
  double combined = 0.0;
};

/// Non-owning labels for one batch; either span may be empty when the model
/// has no matching head.
struct BatchLabels {
  std::span<const int> tactic;
  std::span<const std::array<std::uint8_t, 2>> attributes;
};

template <typename S>
struct HeadOutputs {
  Matrix<S> tactic;      // [batch, 4] softmax probabilities
  Matrix<S> attributes;  // [batch, 2] sigmoid probabilities
};

inline constexpr double kProbabilityClip = 1e-12;

template <typename S>
double categorical_cross_entropy(const Matrix<S>& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw std::invalid_argument("label count mismatch");
  double sum = 0.0;
  for (Index b = 0; b < probs.rows(); ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= probs.cols()) throw std::out_of_range("tactic label out of range");
    sum -= std::log(std::max(static_cast<double>(probs(b, y)), kProbabilityClip));
  }
  return sum / static_cast<double>(probs.rows());
}

/// Mean over the batch and both labels.
template <typename S>
double binary_cross_entropy(const Matrix<S>& probs, std::span<const std::array<std::uint8_t, 2>> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw std::invalid_argument("label count mismatch");
  double sum = 0.0;
  for (Index b = 0; b < probs.rows(); ++b) {
    for (Index k = 0; k < 2; ++k) {
      const auto y = labels[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
      if (y > 1) throw std::out_of_range("attribute label must be 0 or 1");
      const double p = std::clamp(static_cast<double>(probs(b, k)), kProbabilityClip, 1.0 - kProbabilityClip);
      sum -= y ? std::log(p) : std::log(1.0 - p);
    }
  }
  return sum / static_cast<double>(2 * probs.rows());
}

template <typename S>
LossValue loss(const HeadOutputs<S>& out, const BatchLabels& labels, OutputKind kind, LossWeights w = {}) {
  LossValue v;
  if (has_tactic_head(kind)) v.categorical = categorical_cross_entropy(out.tactic, labels.tactic);
  if (has_attribute_head(kind)) v.binary = binary_cross_entropy(out.attributes, labels.attributes);
  switch (kind) {
    case OutputKind::multiclass: v.combined = v.categorical; break;
    case OutputKind::multilabel: v.combined = v.binary; break;
    case OutputKind::multihead: v.combined = w.attribute * v.binary + w.tactic * v.categorical; break;
  }
  return v;
}

template <typename S>
void softmax_rows(Matrix<S>& z) {
  for (Index b = 0; b < z.rows(); ++b) {
    const S m = z.row(b).maxCoeff();
    z.row(b) = (z.row(b).array() - m).exp();
    z.row(b) /= z.row(b).sum();
  }
}

template <typename S>
void sigmoid_inplace(Matrix<S>& z) {
  z = z.unaryExpr([](S v) { return v >= S(0) ? S(1) / (S(1) + std::exp(-v)) : std::exp(v) / (S(1) + std::exp(v)); });
}

struct Predictions {
  std::vector<int> tactic;                              // empty without a tactic head
  std::vector<std::array<std::uint8_t, 2>> attributes;  // empty without an attribute head
};

/// Argmax with ties to the lower index; attribute bit set at p >= 0.5.
template <typename S>
Predictions decide(const HeadOutputs<S>& out) {
  Predictions p;
  for (Index b = 0; b < out.tactic.rows(); ++b) {
    int best = 0;
    for (Index k = 1; k < out.tactic.cols(); ++k) {
      if (out.tactic(b, k) > out.tactic(b, best)) best = static_cast<int>(k);
    }
    p.tactic.push_back(best);
  }
  for (Index b = 0; b < out.attributes.rows(); ++b) {
    p.attributes.push_back({static_cast<std::uint8_t>(out.attributes(b, 0) >= S(0.5)),
                            static_cast<std::uint8_t>(out.attributes(b, 1) >= S(0.5))});
  }
  return p;
}

/// A trunk of layers producing flat features, followed by a 4-way softmax
/// tactic head and/or a 2-way sigmoid attribute head.
template <typename S>
class Model {
 public:
  using LayerPtr = std::unique_ptr<Layer<S>>;

  Model(const ModelSpec& spec, std::vector<LayerPtr> trunk) : spec_(spec), trunk_(std::move(trunk)) {
    Shape shape{spec.time_steps, spec.features};
    for (const auto& l : trunk_) shape = l->output_shape(shape);
    if (shape.time != 1) throw std::invalid_argument("model trunk must end in flat features");
    feature_width_ = shape.channels;
    if (has_attribute_head(spec.output)) attr_head_.emplace(feature_width_, 2);
    if (has_tactic_head(spec.output)) tactic_head_.emplace(feature_width_ + (concat() ? 2 : 0), TacticLabel::kCount);
    acts_.resize(trunk_.size() + 1);
  }

  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] bool concat() const noexcept {
    return spec_.output == OutputKind::multihead && spec_.attribute_concat;
  }
  [[nodiscard]] std::span<const LayerPtr> trunk() const noexcept { return trunk_; }
  [[nodiscard]] Index feature_width() const noexcept { return feature_width_; }
  Dense<S>* tactic_head() { return tactic_head_ ? &*tactic_head_ : nullptr; }
  Dense<S>* attribute_head() { return attr_head_ ? &*attr_head_ : nullptr; }

  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& l : trunk_) l->initialize(rng);
    if (attr_head_) attr_head_->initialize(rng);
    if (tactic_head_) tactic_head_->initialize(rng);
  }

  /// Trunk parameters in layer order, then the attribute head, then the
  /// tactic head.
  std::vector<Parameter<S>> parameters() {
    std::vector<Parameter<S>> ps;
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
      for (auto p : trunk_[i]->parameters()) {
        p.name = std::to_string(i) + "." + std::string(trunk_[i]->kind()) + "." + p.name;
        ps.push_back(p);
      }
    }
    for (auto* head : {attribute_head(), tactic_head()}) {
      if (!head) continue;
      for (auto p : head->parameters()) {
        p.name = (head == attr_head_.operator->() ? "attribute_head." : "tactic_head.") + p.name;
        ps.push_back(p);
      }
    }
    return ps;
  }

  [[nodiscard]] std::size_t parameter_count() {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += static_cast<std::size_t>(p.value->size());
    return n;
  }

  /// `input` is [batch * time_steps, features].
  const HeadOutputs<S>& forward(const Matrix<S>& input, const ForwardContext& ctx = {}) {
    if (input.cols() != spec_.features || spec_.time_steps == 0 || input.rows() % spec_.time_steps != 0) {
      throw std::invalid_argument("input shape does not match the model (expected [batch*" +
                                  std::to_string(spec_.time_steps) + ", " + std::to_string(spec_.features) + "])");
    }
    acts_[0].value = input;
    acts_[0].time = spec_.time_steps;
    for (std::size_t i = 0; i < trunk_.size(); ++i) trunk_[i]->forward(acts_[i], acts_[i + 1], ctx);
    const Matrix<S>& h = acts_.back().value;
    const ForwardContext none{};
    if (attr_head_) {
      head_in_.value = h;
      head_in_.time = 1;
      attr_head_->forward(head_in_, attr_logits_, none);
      out_.attributes = attr_logits_.value;
      sigmoid_inplace(out_.attributes);
    } else {
      out_.attributes.resize(0, 2);
    }
    if (tactic_head_) {
      tactic_in_.time = 1;
      if (concat()) {
        tactic_in_.value.resize(h.rows(), h.cols() + 2);
        tactic_in_.value.leftCols(h.cols()) = h;
        tactic_in_.value.rightCols(2) = out_.attributes;
      } else {
        tactic_in_.value = h;
      }
      tactic_head_->forward(tactic_in_, tactic_logits_, none);
      out_.tactic = tactic_logits_.value;
      softmax_rows(out_.tactic);
    } else {
      out_.tactic.resize(0, TacticLabel::kCount);
    }
    return out_;
  }

  [[nodiscard]] const HeadOutputs<S>& outputs() const noexcept { return out_; }

  /// Gradients of the loss for the last forward() call.
  void backward(const BatchLabels& labels, LossWeights w = {}) {
    const Index batch = acts_.back().value.rows();
    const auto& kind = spec_.output;
    const S n = static_cast<S>(batch);
    Matrix<S> dh = Matrix<S>::Zero(batch, feature_width_);
    Matrix<S> d_attr_prob;  // gradient reaching the attribute probabilities through concat

    if (tactic_head_) {
      const S scale = static_cast<S>(kind == OutputKind::multihead ? w.tactic : 1.0) / n;
      Activation<S> dz{out_.tactic, 1};
      for (Index b = 0; b < batch; ++b) dz.value(b, labels.tactic[static_cast<std::size_t>(b)]) -= S(1);
      dz.value *= scale;
      Activation<S> din;
      tactic_head_->backward(tactic_in_, dz, &din);
      dh += din.value.leftCols(feature_width_);
      if (concat()) d_attr_prob = din.value.rightCols(2);
    }
    if (attr_head_) {
      const S scale = static_cast<S>(kind == OutputKind::multihead ? w.attribute : 1.0) / (S(2) * n);
      Activation<S> dz{out_.attributes, 1};
      for (Index b = 0; b < batch; ++b) {
        for (Index k = 0; k < 2; ++k) {
          dz.value(b, k) -= static_cast<S>(labels.attributes[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)]);
        }
      }
      dz.value *= scale;
      if (d_attr_prob.size() > 0) {
        const auto& q = out_.attributes.array();
        dz.value.array() += d_attr_prob.array() * q * (S(1) - q);
      }
      Activation<S> din;
      attr_head_->backward(head_in_, dz, &din);
      dh += din.value;
    }

    Activation<S> grad{std::move(dh), 1};
    Activation<S> next;
    for (std::size_t i = trunk_.size(); i-- > 0;) {
      trunk_[i]->backward(acts_[i], grad, i > 0 ? &next : nullptr);
      if (i > 0) std::swap(grad, next);
    }
  }

  nlohmann::json describe() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : trunk_) layers.push_back(l->describe());
    return {{"arch", std::string(to_string(spec_.arch))},
            {"output", std::string(to_string(spec_.output))},
            {"attribute_concat", spec_.attribute_concat},
            {"time_steps", spec_.time_steps},
            {"features", spec_.features},
            {"layers", layers}};
  }

 private:
  ModelSpec spec_;
  std::vector<LayerPtr> trunk_;
  std::optional<Dense<S>> attr_head_;
  std::optional<Dense<S>> tactic_head_;
  Index feature_width_ = 0;
  std::vector<Activation<S>> acts_;
  Activation<S> head_in_, tactic_in_, attr_logits_, tactic_logits_;
  HeadOutputs<S> out_;
};

/// Trunks for the built-in architectures:
///   logreg: flatten (softmax/sigmoid heads make it multinomial logistic regression)
///   fc:     flatten, dense 100-100-60 with ReLU and dropout 0.2
///   cnn:    conv 64k3, pool 3, conv 32k3, pool 3, conv 192k5, conv 96k7, ReLU after each conv,
///           global average pool, dropout 0.1
///   fcn:    conv 96k7, conv 32k5, ReLU after each, global average pool
template <typename S>
std::vector<std::unique_ptr<Layer<S>>> make_trunk(Architecture arch, Index time_steps, Index features) {
  std::vector<std::unique_ptr<Layer<S>>> t;
  const auto conv = [&](Index in, Index filters, Index k) {
    t.push_back(std::make_unique<Conv1D<S>>(in, filters, k));
    t.push_back(std::make_unique<ReLU<S>>());
  };
  switch (arch) {
    case Architecture::logreg:
      t.push_back(std::make_unique<Flatten<S>>());
      break;
    case Architecture::fc: {
      t.push_back(std::make_unique<Flatten<S>>());
      Index width = time_steps * features;
      for (Index units : {100, 100, 60}) {
        t.push_back(std::make_unique<Dense<S>>(width, units));
        t.push_back(std::make_unique<ReLU<S>>());
        t.push_back(std::make_unique<Dropout<S>>(0.2));
        width = units;
      }
      break;
    }
    case Architecture::cnn:
      if (time_steps < 9) throw std::invalid_argument("cnn needs at least 9 time steps");
      conv(features, 64, 3);
      t.push_back(std::make_unique<MaxPool1D<S>>(3));
      conv(64, 32, 3);
      t.push_back(std::make_unique<MaxPool1D<S>>(3));
      conv(32, 192, 5);
      conv(192, 96, 7);
      t.push_back(std::make_unique<GlobalAvgPool<S>>());
      t.push_back(std::make_unique<Dropout<S>>(0.1));
      break;
    case Architecture::fcn:
      conv(features, 96, 7);
      conv(96, 32, 5);
      t.push_back(std::make_unique<GlobalAvgPool<S>>());
      break;
    case Architecture::custom:
      throw std::invalid_argument("custom architectures are assembled by the caller");
  }
  return t;
}

template <typename S>
Model<S> build_model(const ModelSpec& spec, std::uint64_t seed) {
  Model<S> m(spec, make_trunk<S>(spec.arch, spec.time_steps, spec.features));
  m.initialize(seed);
  return m;
}

/// Copies of every parameter array, for restoring the best epoch.
template <typename S>
std::vector<Matrix<S>> snapshot(Model<S>& m) {
  std::vector<Matrix<S>> out;
  for (const auto& p : m.parameters()) out.push_back(*p.value);
  return out;
}

template <typename S>
void restore(Model<S>& m, const std::vector<Matrix<S>>& saved) {
  auto ps = m.parameters();
  if (ps.size() != saved.size()) throw std::invalid_argument("snapshot does not match model");
  for (std::size_t i = 0; i < ps.size(); ++i) *ps[i].value = saved[i];
}

/// Batched inference over [n * time, features] rows.
template <typename S>
HeadOutputs<S> predict_probabilities(Model<S>& m, const Matrix<S>& x, Index chunk = 256) {
  const Index t = m.spec().time_steps;
  const Index n = x.rows() / t;
  HeadOutputs<S> all;
  all.tactic.resize(has_tactic_head(m.spec().output) ? n : 0, TacticLabel::kCount);
  all.attributes.resize(has_attribute_head(m.spec().output) ? n : 0, 2);
  for (Index start = 0; start < n; start += chunk) {
    const Index len = std::min(chunk, n - start);
    const Matrix<S> block = x.middleRows(start * t, len * t);
    const auto& out = m.forward(block);
    if (all.tactic.rows() > 0) all.tactic.middleRows(start, len) = out.tactic;
    if (all.attributes.rows() > 0) all.attributes.middleRows(start, len) = out.attributes;
  }
  return all;
}

// ---------------------------------------------------------------------------
// Checkpoints: SWRM container, kind "model", f64 parameter arrays in
// parameters() order.

template <typename S>
void save_checkpoint(const std::string& path, Model<S>& m, const nlohmann::json& extra = nlohmann::json::object()) {
  if (m.spec().arch == Architecture::custom) throw std::invalid_argument("only built-in architectures can be saved");
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& p : m.parameters()) shapes.push_back({{"name", p.name}, {"rows", p.value->rows()}, {"cols", p.value->cols()}});
  nlohmann::json header = {{"kind", "model"}, {"model", m.describe()}, {"parameters", shapes}, {"extra", extra}};
  io::ContainerWriter w(path, header);
  for (const auto& p : m.parameters()) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> v = p.value->template cast<double>();
    w.write_array(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  }
  w.close();
}

struct CheckpointInfo {
  ModelSpec spec;
  nlohmann::json extra;
};

template <typename S>
std::pair<Model<S>, CheckpointInfo> load_checkpoint(const std::string& path) {
  io::ContainerReader r(path);
  r.expect_kind("model");
  const auto& h = r.header();
  CheckpointInfo info;
  try {
    const auto& d = h.at("model");
    info.spec.arch = parse_architecture(d.at("arch").get<std::string>());
    info.spec.output = parse_output_kind(d.at("output").get<std::string>());
    info.spec.attribute_concat = d.at("attribute_concat");
    info.spec.time_steps = d.at("time_steps");
    info.spec.features = d.at("features");
    info.extra = h.value("extra", nlohmann::json::object());
  } catch (const std::exception& e) {
    throw DataError("'" + path + "': bad model header: " + e.what());
  }
  Model<S> m = build_model<S>(info.spec, 0);
  const auto& shapes = h.at("parameters");
  auto ps = m.parameters();
  if (shapes.size() != ps.size()) throw DataError("'" + path + "': parameter count mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Index rows = shapes[i].at("rows"), cols = shapes[i].at("cols");
    if (rows != ps[i].value->rows() || cols != ps[i].value->cols())
      throw DataError("'" + path + "': shape mismatch for " + ps[i].name);
    const auto v = r.read_array<double>(static_cast<std::size_t>(rows * cols));
    for (Index k = 0; k < rows * cols; ++k) ps[i].value->data()[k] = static_cast<S>(v[static_cast<std::size_t>(k)]);
  }
  r.expect_end();
  return {std::move(m), info};
}

}  // namespace swarmtsc::nn
