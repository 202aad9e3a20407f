#pragma once

// Layers over batched sequences. An activation is a row-major matrix with
// one row per (instance, time step) pair, instance-major, and one column per
// channel. Flat activations have time == 1.

#include <Eigen/Core>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "swarmtsc/rng.hpp"

namespace swarmtsc::nn {

using Index = Eigen::Index;

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
struct Activation {
  Matrix<S> value;
  Index time = 1;

  [[nodiscard]] Index batch() const { return time == 0 ? 0 : value.rows() / time; }
  [[nodiscard]] Index channels() const { return value.cols(); }
};

struct Shape {
  Index time = 1;
  Index channels = 0;
  friend bool operator==(Shape, Shape) = default;
};

/// Learnable array and its gradient, both owned by a layer.
template <typename S>
struct Parameter {
  std::string name;
  Matrix<S>* value;
  Matrix<S>* grad;
};

struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;
};

template <typename S>
class Layer {
 public:
  virtual ~Layer() = default;
  [[nodiscard]] virtual std::string_view kind() const = 0;
  /// Throws std::invalid_argument when `in` is incompatible.
  [[nodiscard]] virtual Shape output_shape(Shape in) const = 0;
  virtual void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext& ctx) = 0;
  /// `in` is the input seen by the last forward call. Fills parameter
  /// gradients and, when grad_in is non-null, the input gradient.
  virtual void backward(const Activation<S>& in, const Activation<S>& grad_out, Activation<S>* grad_in) = 0;
  virtual std::vector<Parameter<S>> parameters() { return {}; }
  /// He-normal weights, zero biases.
  virtual void initialize(Rng&) {}
  [[nodiscard]] virtual nlohmann::json describe() const { return {{"kind", std::string(kind())}}; }
};

namespace detail {
template <typename S>
void he_normal(Matrix<S>& w, Index fan_in, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<S>(rng.normal() * sd);
}
}  // namespace detail

// ---------------------------------------------------------------------------

template <typename S>
class Dense final : public Layer<S> {
 public:
  Dense(Index in, Index out) : w_(Matrix<S>::Zero(in, out)), b_(Matrix<S>::Zero(1, out)), gw_(w_), gb_(b_) {}

  std::string_view kind() const override { return "dense"; }
  Shape output_shape(Shape in) const override {
    if (in.time != 1 || in.channels != w_.rows())
      throw std::invalid_argument("dense layer expects flat input of width " + std::to_string(w_.rows()));
    return {1, w_.cols()};
  }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext&) override {
    out.time = 1;
    out.value.noalias() = in.value * w_;
    out.value.rowwise() += b_.row(0);
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    gw_.noalias() = in.value.transpose() * g.value;
    gb_ = g.value.colwise().sum();
    if (grad_in) {
      grad_in->time = 1;
      grad_in->value.noalias() = g.value * w_.transpose();
    }
  }
  std::vector<Parameter<S>> parameters() override { return {{"weight", &w_, &gw_}, {"bias", &b_, &gb_}}; }
  void initialize(Rng& rng) override {
    detail::he_normal(w_, w_.rows(), rng);
    b_.setZero();
  }
  nlohmann::json describe() const override { return {{"kind", "dense"}, {"in", w_.rows()}, {"out", w_.cols()}}; }

  Matrix<S>& weight() { return w_; }
  Matrix<S>& bias() { return b_; }

 private:
  Matrix<S> w_, b_, gw_, gb_;
};

/// 1D convolution with "same" zero padding (left pad (k-1)/2), computed as an
/// im2col product. Weight shape [kernel * in_channels, filters], row index
/// tap * in_channels + channel.
template <typename S>
class Conv1D final : public Layer<S> {
 public:
  Conv1D(Index in_channels, Index filters, Index kernel)
      : in_(in_channels), kernel_(kernel),
        w_(Matrix<S>::Zero(kernel * in_channels, filters)), b_(Matrix<S>::Zero(1, filters)), gw_(w_), gb_(b_) {
    if (kernel < 1) throw std::invalid_argument("kernel size must be >= 1");
  }

  std::string_view kind() const override { return "conv1d"; }
  Shape output_shape(Shape in) const override {
    if (in.channels != in_) throw std::invalid_argument("conv1d expects " + std::to_string(in_) + " channels");
    return {in.time, w_.cols()};
  }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext&) override {
    const Index t_len = in.time, batch = in.batch(), pad = (kernel_ - 1) / 2;
    cols_.resize(batch * t_len, kernel_ * in_);
    for (Index b = 0; b < batch; ++b) {
      for (Index t = 0; t < t_len; ++t) {
        S* dst = cols_.data() + (b * t_len + t) * cols_.cols();
        for (Index k = 0; k < kernel_; ++k, dst += in_) {
          const Index src_t = t + k - pad;
          if (src_t < 0 || src_t >= t_len) {
            std::fill(dst, dst + in_, S(0));
          } else {
            const S* src = in.value.data() + (b * t_len + src_t) * in_;
            std::copy(src, src + in_, dst);
          }
        }
      }
    }
    out.time = t_len;
    out.value.noalias() = cols_ * w_;
    out.value.rowwise() += b_.row(0);
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    gw_.noalias() = cols_.transpose() * g.value;
    gb_ = g.value.colwise().sum();
    if (!grad_in) return;
    dcols_.noalias() = g.value * w_.transpose();
    const Index t_len = in.time, batch = in.batch(), pad = (kernel_ - 1) / 2;
    grad_in->time = t_len;
    grad_in->value.setZero(in.value.rows(), in_);
    for (Index b = 0; b < batch; ++b) {
      for (Index t = 0; t < t_len; ++t) {
        const S* src = dcols_.data() + (b * t_len + t) * dcols_.cols();
        for (Index k = 0; k < kernel_; ++k, src += in_) {
          const Index dst_t = t + k - pad;
          if (dst_t < 0 || dst_t >= t_len) continue;
          S* dst = grad_in->value.data() + (b * t_len + dst_t) * in_;
          for (Index c = 0; c < in_; ++c) dst[c] += src[c];
        }
      }
    }
  }
  std::vector<Parameter<S>> parameters() override { return {{"weight", &w_, &gw_}, {"bias", &b_, &gb_}}; }
  void initialize(Rng& rng) override {
    detail::he_normal(w_, w_.rows(), rng);
    b_.setZero();
  }
  nlohmann::json describe() const override {
    return {{"kind", "conv1d"}, {"in", in_}, {"filters", w_.cols()}, {"kernel", kernel_}};
  }

  Matrix<S>& weight() { return w_; }
  Matrix<S>& bias() { return b_; }

 private:
  Index in_, kernel_;
  Matrix<S> w_, b_, gw_, gb_;
  Matrix<S> cols_, dcols_;
};

template <typename S>
class ReLU final : public Layer<S> {
 public:
  std::string_view kind() const override { return "relu"; }
  Shape output_shape(Shape in) const override { return in; }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext&) override {
    out.time = in.time;
    out.value = in.value.cwiseMax(S(0));
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    if (!grad_in) return;
    grad_in->time = in.time;
    grad_in->value = (in.value.array() > S(0)).select(g.value, S(0));
  }
};

/// Non-overlapping max pooling over time; trailing steps that do not fill a
/// window are dropped. Ties go to the earliest step.
template <typename S>
class MaxPool1D final : public Layer<S> {
 public:
  explicit MaxPool1D(Index size) : size_(size) {
    if (size < 1) throw std::invalid_argument("pool size must be >= 1");
  }

  std::string_view kind() const override { return "max_pool1d"; }
  Shape output_shape(Shape in) const override {
    if (in.time / size_ < 1) throw std::invalid_argument("sequence too short for max pooling");
    return {in.time / size_, in.channels};
  }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext&) override {
    const Index t_in = in.time, t_out = t_in / size_, batch = in.batch(), ch = in.channels();
    out.time = t_out;
    out.value.resize(batch * t_out, ch);
    argmax_.resize(static_cast<std::size_t>(batch * t_out * ch));
    for (Index b = 0; b < batch; ++b) {
      for (Index t = 0; t < t_out; ++t) {
        const Index row_out = b * t_out + t;
        const Index first = b * t_in + t * size_;
        for (Index c = 0; c < ch; ++c) {
          Index best_row = first;
          S best = in.value(first, c);
          for (Index row = first + 1; row < first + size_; ++row) {
            if (in.value(row, c) > best) {
              best = in.value(row, c);
              best_row = row;
            }
          }
          out.value(row_out, c) = best;
          argmax_[static_cast<std::size_t>(row_out * ch + c)] = best_row;
        }
      }
    }
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    if (!grad_in) return;
    const Index ch = in.channels();
    grad_in->time = in.time;
    grad_in->value.setZero(in.value.rows(), ch);
    for (Index r = 0; r < g.value.rows(); ++r) {
      for (Index c = 0; c < ch; ++c) {
        grad_in->value(argmax_[static_cast<std::size_t>(r * ch + c)], c) += g.value(r, c);
      }
    }
  }
  nlohmann::json describe() const override { return {{"kind", "max_pool1d"}, {"size", size_}}; }

 private:
  Index size_;
  std::vector<Index> argmax_;
};

template <typename S>
class GlobalAvgPool final : public Layer<S> {
 public:
  std::string_view kind() const override { return "global_avg_pool"; }
  Shape output_shape(Shape in) const override { return {1, in.channels}; }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext&) override {
    const Index batch = in.batch();
    out.time = 1;
    out.value.resize(batch, in.channels());
    for (Index b = 0; b < batch; ++b) out.value.row(b) = in.value.middleRows(b * in.time, in.time).colwise().mean();
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    if (!grad_in) return;
    grad_in->time = in.time;
    grad_in->value.resize(in.value.rows(), in.channels());
    const S scale = S(1) / static_cast<S>(in.time);
    for (Index b = 0; b < g.value.rows(); ++b) {
      grad_in->value.middleRows(b * in.time, in.time).rowwise() = g.value.row(b) * scale;
    }
  }
};

/// [batch * time, channels] -> [batch, time * channels], time-major.
template <typename S>
class Flatten final : public Layer<S> {
 public:
  std::string_view kind() const override { return "flatten"; }
  Shape output_shape(Shape in) const override { return {1, in.time * in.channels}; }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext&) override {
    out.time = 1;
    out.value = Eigen::Map<const Matrix<S>>(in.value.data(), in.batch(), in.time * in.channels());
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    if (!grad_in) return;
    grad_in->time = in.time;
    grad_in->value = Eigen::Map<const Matrix<S>>(g.value.data(), in.value.rows(), in.channels());
  }
};

/// Inverted dropout; identity outside training.
template <typename S>
class Dropout final : public Layer<S> {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  }

  std::string_view kind() const override { return "dropout"; }
  Shape output_shape(Shape in) const override { return in; }
  void forward(const Activation<S>& in, Activation<S>& out, const ForwardContext& ctx) override {
    out.time = in.time;
    active_ = ctx.training && rate_ > 0.0;
    if (!active_) {
      out.value = in.value;
      return;
    }
    if (!ctx.rng) throw std::logic_error("dropout in training mode needs an rng");
    mask_.resize(in.value.rows(), in.value.cols());
    const S keep = static_cast<S>(1.0 / (1.0 - rate_));
    for (Index i = 0; i < mask_.size(); ++i) mask_.data()[i] = ctx.rng->uniform() < rate_ ? S(0) : keep;
    out.value = in.value.cwiseProduct(mask_);
  }
  void backward(const Activation<S>& in, const Activation<S>& g, Activation<S>* grad_in) override {
    if (!grad_in) return;
    grad_in->time = in.time;
    grad_in->value = active_ ? Matrix<S>(g.value.cwiseProduct(mask_)) : g.value;
  }
  nlohmann::json describe() const override { return {{"kind", "dropout"}, {"rate", rate_}}; }

 private:
  double rate_;
  bool active_ = false;
  Matrix<S> mask_;
};

}  // namespace swarmtsc::nn
