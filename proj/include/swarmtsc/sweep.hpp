#pragma once

// Experiment sweeps: each cell builds its dataset, trains a fresh model and
// scores it on validation and test. Cells are pure functions of their inputs
// and seeds.

#include <chrono>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmtsc/dataset.hpp"
#include "swarmtsc/metrics.hpp"
#include "swarmtsc/nn/model.hpp"
#include "swarmtsc/nn/train.hpp"
#include "swarmtsc/trajectory_io.hpp"

namespace swarmtsc {

struct SweepModel {
  nn::Architecture arch = nn::Architecture::cnn;
  OutputKind output = OutputKind::multihead;

  [[nodiscard]] std::string name() const {
    return std::string(nn::to_string(arch)) + "-" + std::string(to_string(output));
  }
};

enum class NoiseProtocol {
  matched,    // every split carries the same noise factor
  test_only,  // clean train/val, noisy test
};

inline std::string_view to_string(NoiseProtocol p) { return p == NoiseProtocol::matched ? "matched" : "test-only"; }

inline NoiseProtocol parse_noise_protocol(std::string_view s) {
  if (s == "matched") return NoiseProtocol::matched;
  if (s == "test-only") return NoiseProtocol::test_only;
  throw std::invalid_argument("unknown noise protocol '" + std::string(s) + "'");
}

struct SweepOptions {
  nn::TrainConfig train{};
  /// Dataset seed (split shuffle and noise draws).
  std::uint64_t seed = 0;
  /// Observation window for the noise and size sweeps; 0 = full.
  std::size_t window = 0;
  NoiseProtocol noise = NoiseProtocol::matched;
  std::function<void(const std::string&)> log;
};

struct CellResult {
  SweepModel model;
  MetricsReport report;
  double seconds = 0.0;
};

struct TrainedCell {
  nn::Model<float> model;
  nn::TrainResult training;
  CellResult result;
};

/// Trains `model` on `d` and scores it. The model is initialized from
/// child_seed(cfg.seed, 1); the training loop draws its own streams from
/// cfg.seed.
inline TrainedCell train_cell(const Dataset& d, const SweepModel& model, const nn::TrainConfig& cfg,
                              const std::function<void(std::size_t, const nn::EpochRecord&)>& on_epoch = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto train_set = nn::make_split<float>(d, d.splits.train);
  const auto val_set = nn::make_split<float>(d, d.splits.val);
  const auto test_set = nn::make_split<float>(d, d.splits.test);
  const nn::ModelSpec spec{model.arch, model.output, true, static_cast<nn::Index>(d.features.time),
                           static_cast<nn::Index>(d.features.features)};
  TrainedCell out{nn::build_model<float>(spec, child_seed(cfg.seed, 1)), {}, {}};
  out.training = nn::train(out.model, train_set, val_set, cfg, on_epoch);
  auto& cell = out.result;
  cell.model = model;
  cell.report.validation = evaluate(out.model, val_set, cfg.weights);
  cell.report.test = evaluate(out.model, test_set, cfg.weights);
  cell.report.val_loss_min = out.training.best_val.combined;
  cell.report.epochs_trained = out.training.epochs_trained();
  cell.report.best_epoch = out.training.best_epoch;
  cell.report.parameters = out.model.parameter_count();
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline CellResult run_cell(const Dataset& d, const SweepModel& model, const nn::TrainConfig& cfg,
                           const std::function<void(std::size_t, const nn::EpochRecord&)>& on_epoch = {}) {
  return train_cell(d, model, cfg, on_epoch).result;
}

struct SweepPoint {
  double axis = 0.0;
  TruncationStats truncation;
  std::vector<CellResult> cells;
};

struct SweepResult {
  std::string axis_name;
  std::vector<SweepPoint> points;

  [[nodiscard]] const CellResult& cell(std::size_t point, const SweepModel& m) const {
    for (const auto& c : points.at(point).cells) {
      if (c.model.arch == m.arch && c.model.output == m.output) return c;
    }
    throw std::out_of_range("no sweep cell for model " + m.name());
  }
};

namespace detail {

inline void log_cell(const SweepOptions& opt, const std::string& axis, double value, const CellResult& c) {
  if (!opt.log) return;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s=%g %s: test tactic %.4f comms %.4f pronav %.4f (%zu epochs, %.1fs)",
                axis.c_str(), value, c.model.name().c_str(), c.report.test.tactic().metrics.accuracy,
                c.report.test.comms().metrics.accuracy, c.report.test.pronav().metrics.accuracy,
                c.report.epochs_trained, c.seconds);
  opt.log(buf);
}

inline SweepPoint run_point(const std::string& axis, double value, const Dataset& d,
                            std::span<const SweepModel> models, const SweepOptions& opt) {
  SweepPoint p{value, d.truncation, {}};
  for (const auto& m : models) {
    p.cells.push_back(run_cell(d, m, opt.train));
    detail::log_cell(opt, axis, value, p.cells.back());
  }
  return p;
}

inline void require_increasing(std::span<const std::size_t> v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) throw std::invalid_argument(std::string(what) + " must be strictly increasing");
  }
}

}  // namespace detail

/// Observation-window sweep. A window of 0 means the full truncated length;
/// the axis records actual step counts.
inline SweepResult sweep_window(std::span<const Trajectory> batch, std::span<const SweepModel> models,
                                std::vector<std::size_t> windows, const SweepOptions& opt) {
  const std::size_t full = truncation_stats(batch).min_length;
  for (auto& w : windows) w = w == 0 ? full : w;
  detail::require_increasing(windows, "windows");
  SweepResult r{"window", {}};
  for (std::size_t w : windows) {
    BuildOptions b;
    b.window = w;
    b.seed = opt.seed;
    const Dataset d = build_dataset(batch, b);
    r.points.push_back(detail::run_point(r.axis_name, static_cast<double>(w), d, models, opt));
  }
  return r;
}

/// Noise sweep over percent factors. Matched protocol trains and tests at
/// the same factor; test-only trains clean and perturbs the test split.
inline SweepResult sweep_noise(std::span<const Trajectory> batch, std::span<const SweepModel> models,
                               std::span<const double> factors, const SweepOptions& opt) {
  for (std::size_t i = 1; i < factors.size(); ++i) {
    if (factors[i] <= factors[i - 1]) throw std::invalid_argument("noise factors must be strictly increasing");
  }
  SweepResult r{"noise", {}};
  for (double f : factors) {
    BuildOptions b;
    b.window = opt.window;
    b.seed = opt.seed;
    Dataset d;
    if (opt.noise == NoiseProtocol::matched) {
      b.noise_factor = f;
      d = build_dataset(batch, b);
    } else {
      d = build_dataset(batch, b);
      add_noise(d.features, NoiseSpec{f, 40.0, 1.0, noise_seed(opt.seed)}, d.splits.test);
      d.noise_factor = f;
    }
    r.points.push_back(detail::run_point(r.axis_name, f, d, models, opt));
  }
  return r;
}

/// Swarm-size sweep: N v N engagements, `per_tactic` instances per tactic,
/// simulated from `sim_seed`.
inline SweepResult sweep_swarmsize(std::span<const SweepModel> models, std::vector<std::size_t> sizes,
                                   std::size_t per_tactic, std::uint64_t sim_seed, const SweepOptions& opt,
                                   EngagementConfig base = {}) {
  detail::require_increasing(sizes, "swarm sizes");
  SweepResult r{"swarm_size", {}};
  for (std::size_t n : sizes) {
    base.n_attackers = base.n_defenders = n;
    const auto batch = simulate_all_tactics(base, per_tactic, sim_seed);
    BuildOptions b;
    b.window = opt.window;
    b.seed = opt.seed;
    const Dataset d = build_dataset(batch, b);
    r.points.push_back(detail::run_point(r.axis_name, static_cast<double>(n), d, models, opt));
  }
  return r;
}

/// One row per (axis value, model, head) with test-split metrics and the
/// head's validation loss at the restored epoch. Without `timing` the
/// seconds column is 0, so reruns give identical bytes.
inline void write_csv(std::ostream& os, const SweepResult& r, bool timing = false) {
  os << "axis,model,head,accuracy,acc_adj,ner,val_loss,params,seconds\n";
  char buf[320];
  for (const auto& p : r.points) {
    for (const auto& c : p.cells) {
      for (std::size_t h = 0; h < 3; ++h) {
        const auto& test = c.report.test.heads[h];
        const auto& val = c.report.validation.heads[h];
        std::snprintf(buf, sizeof buf, "%g,%s,%s,%.6f,%.6f,%.6f,%.6f,%zu,%.3f\n", p.axis, c.model.name().c_str(),
                      test.head.c_str(), test.metrics.accuracy, test.metrics.adjusted, test.metrics.normalized_error,
                      val.loss, c.report.parameters, timing ? c.seconds : 0.0);
        os << buf;
      }
    }
  }
}

}  // namespace swarmtsc
