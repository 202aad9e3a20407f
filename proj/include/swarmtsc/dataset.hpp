#pragma once

// Trajectories -> model-ready tensors. Pipeline order is fixed:
// truncate to shortest -> stratified split -> window -> noise -> normalize.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmtsc/container.hpp"
#include "swarmtsc/engagement.hpp"
#include "swarmtsc/parallel.hpp"
#include "swarmtsc/rng.hpp"

namespace swarmtsc {

/// f32 [instance, time, feature]; per-step features are laid out in blocks
/// [Px_1..Px_N, Py_1..Py_N, Vx_1..Vx_N, Vy_1..Vy_N].
struct FeatureTensor {
  std::size_t instances = 0;
  std::size_t time = 0;
  std::size_t features = 0;
  std::vector<float> data;

  FeatureTensor() = default;
  FeatureTensor(std::size_t n, std::size_t t, std::size_t f) : instances(n), time(t), features(f), data(n * t * f) {}

  [[nodiscard]] float& at(std::size_t n, std::size_t t, std::size_t f) { return data[(n * time + t) * features + f]; }
  [[nodiscard]] float at(std::size_t n, std::size_t t, std::size_t f) const {
    return data[(n * time + t) * features + f];
  }
  [[nodiscard]] std::span<float> instance(std::size_t n) {
    return std::span<float>(data).subspan(n * time * features, time * features);
  }
  [[nodiscard]] std::span<const float> instance(std::size_t n) const {
    return std::span<const float>(data).subspan(n * time * features, time * features);
  }
  /// Number of position features (the first half of each step).
  [[nodiscard]] std::size_t position_features() const noexcept { return features / 2; }

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;
};

struct TruncationStats {
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  double mean_length = 0.0;

  friend bool operator==(const TruncationStats&, const TruncationStats&) = default;
};

/// Copies the first `length` steps of each trajectory into block layout.
inline FeatureTensor to_features(std::span<const Trajectory> batch, std::size_t length) {
  if (batch.empty()) throw std::invalid_argument("empty trajectory batch");
  const std::size_t na = batch[0].n_attackers;
  FeatureTensor x(batch.size(), length, 4 * na);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& tr = batch[n];
    if (tr.n_attackers != na) throw std::invalid_argument("trajectory batch mixes swarm sizes");
    if (tr.steps < length) throw std::invalid_argument("trajectory shorter than requested length");
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t i = 0; i < na; ++i) {
        const auto& s = tr.at(t, i);
        x.at(n, t, i) = s.px;
        x.at(n, t, na + i) = s.py;
        x.at(n, t, 2 * na + i) = s.vx;
        x.at(n, t, 3 * na + i) = s.vy;
      }
    }
  }
  return x;
}

inline TruncationStats truncation_stats(std::span<const Trajectory> batch) {
  if (batch.empty()) throw std::invalid_argument("empty trajectory batch");
  TruncationStats s{batch[0].steps, batch[0].steps, 0.0};
  for (const auto& t : batch) {
    s.min_length = std::min(s.min_length, t.steps);
    s.max_length = std::max(s.max_length, t.steps);
    s.mean_length += static_cast<double>(t.steps);
  }
  s.mean_length /= static_cast<double>(batch.size());
  return s;
}

struct TruncatedBatch {
  FeatureTensor features;
  TruncationStats stats;
};

inline TruncatedBatch truncate_to_shortest(std::span<const Trajectory> batch) {
  const auto stats = truncation_stats(batch);
  return {to_features(batch, stats.min_length), stats};
}

/// Keeps the first `length` time steps.
inline FeatureTensor window(const FeatureTensor& x, std::size_t length) {
  if (length > x.time) {
    throw std::invalid_argument("window of " + std::to_string(length) + " steps exceeds available " +
                                std::to_string(x.time));
  }
  if (length == x.time) return x;
  FeatureTensor out(x.instances, length, x.features);
  for (std::size_t n = 0; n < x.instances; ++n) {
    const auto src = x.instance(n).first(length * x.features);
    std::copy(src.begin(), src.end(), out.instance(n).begin());
  }
  return out;
}

/// Selected instances, in the given order.
inline FeatureTensor gather(const FeatureTensor& x, std::span<const std::size_t> rows) {
  FeatureTensor out(rows.size(), x.time, x.features);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = x.instance(rows[k]);
    std::copy(src.begin(), src.end(), out.instance(k).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitSpec {
  double train = 0.60;
  double val = 0.15;
  double test = 0.25;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  friend bool operator==(const Splits&, const Splits&) = default;
};

/// Stratified split: each tactic contributes floor(train*n), floor(val*n)
/// and the remainder to test; each split is then shuffled.
inline Splits split_shuffle(std::span<const int> tactics, const SplitSpec& spec, std::uint64_t seed) {
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9 || spec.train <= 0 || spec.val < 0 || spec.test < 0)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  std::array<std::vector<std::size_t>, TacticLabel::kCount> by_tactic;
  for (std::size_t n = 0; n < tactics.size(); ++n) {
    const int id = tactics[n];
    if (id < 0 || id >= TacticLabel::kCount) throw std::invalid_argument("tactic id out of range");
    by_tactic[static_cast<std::size_t>(id)].push_back(n);
  }
  const std::size_t per = by_tactic[0].size();
  for (const auto& v : by_tactic) {
    if (v.size() != per) throw std::invalid_argument("per-tactic instance counts are unequal; cannot stratify");
  }
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(per) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(per) + 1e-9));
  Rng rng(seed);
  Splits s;
  for (auto& v : by_tactic) {
    rng.shuffle(v);
    s.train.insert(s.train.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.insert(s.val.end(), v.begin() + static_cast<std::ptrdiff_t>(n_train),
                 v.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.insert(s.test.end(), v.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), v.end());
  }
  rng.shuffle(s.train);
  rng.shuffle(s.val);
  rng.shuffle(s.test);
  return s;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormStats {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> mean;
  std::vector<double> stddev;
  /// Feature columns whose standard deviation was floored.
  std::vector<std::size_t> degenerate;

  friend bool operator==(const NormStats&, const NormStats&) = default;

  /// Per-feature mean and population standard deviation over every time
  /// step of the given instances.
  static NormStats fit(const FeatureTensor& x, std::span<const std::size_t> rows) {
    if (rows.empty()) throw std::invalid_argument("cannot fit normalization on zero instances");
    const std::size_t f = x.features;
    NormStats s;
    s.mean.assign(f, 0.0);
    s.stddev.assign(f, 0.0);
    std::vector<float> lo(f, std::numeric_limits<float>::infinity()), hi(f, -std::numeric_limits<float>::infinity());
    for (std::size_t n : rows) {
      for (std::size_t t = 0; t < x.time; ++t) {
        for (std::size_t k = 0; k < f; ++k) {
          const float v = x.at(n, t, k);
          s.mean[k] += v;
          lo[k] = std::min(lo[k], v);
          hi[k] = std::max(hi[k], v);
        }
      }
    }
    const double count = static_cast<double>(rows.size() * x.time);
    for (std::size_t k = 0; k < f; ++k) s.mean[k] = lo[k] == hi[k] ? static_cast<double>(lo[k]) : s.mean[k] / count;
    for (std::size_t n : rows) {
      for (std::size_t t = 0; t < x.time; ++t) {
        for (std::size_t k = 0; k < f; ++k) {
          const double d = x.at(n, t, k) - s.mean[k];
          s.stddev[k] += d * d;
        }
      }
    }
    for (std::size_t k = 0; k < f; ++k) {
      s.stddev[k] = std::sqrt(s.stddev[k] / count);
      if (!(s.stddev[k] >= kStdFloor)) {
        s.stddev[k] = kStdFloor;
        s.degenerate.push_back(k);
      }
    }
    return s;
  }
};

/// z-score each feature column in place.
inline void normalize(FeatureTensor& x, const NormStats& stats) {
  if (stats.mean.size() != x.features) throw std::invalid_argument("normalization stats do not match feature count");
  std::vector<double> inv(x.features);
  for (std::size_t k = 0; k < x.features; ++k) inv[k] = 1.0 / stats.stddev[k];
  for (std::size_t row = 0; row < x.instances * x.time; ++row) {
    float* p = x.data.data() + row * x.features;
    for (std::size_t k = 0; k < x.features; ++k) p[k] = static_cast<float>((p[k] - stats.mean[k]) * inv[k]);
  }
}

// ---------------------------------------------------------------------------
// Noise

struct NoiseSpec {
  /// Percent of the characteristic length used as the noise std, in [0, 100].
  double factor = 0.0;
  double position_length = 40.0;
  double velocity_length = 1.0;
  std::uint64_t seed = 0;

  [[nodiscard]] double position_sigma() const noexcept { return factor / 100.0 * position_length; }
  [[nodiscard]] double velocity_sigma() const noexcept { return factor / 100.0 * velocity_length; }
};

/// Adds i.i.d. zero-mean Gaussian noise in raw units: positions (first half
/// of each step) get position_sigma, velocities velocity_sigma. Instance n
/// draws from its own stream, child_seed(spec.seed, n). `rows` restricts the
/// instances touched; empty means all.
inline void add_noise(FeatureTensor& x, const NoiseSpec& spec, std::span<const std::size_t> rows = {}) {
  if (!(spec.factor >= 0.0 && spec.factor <= 100.0)) throw std::invalid_argument("noise factor must be in [0, 100]");
  if (spec.factor == 0.0) return;
  const double sp = spec.position_sigma();
  const double sv = spec.velocity_sigma();
  const std::size_t half = x.position_features();
  const auto apply = [&](std::size_t n) {
    Rng rng(child_seed(spec.seed, n));
    auto inst = x.instance(n);
    for (std::size_t t = 0; t < x.time; ++t) {
      for (std::size_t k = 0; k < x.features; ++k) {
        float& v = inst[t * x.features + k];
        v = static_cast<float>(v + rng.normal() * (k < half ? sp : sv));
      }
    }
  };
  if (rows.empty()) {
    parallel_for(x.instances, apply);
  } else {
    parallel_for(rows.size(), [&](std::size_t k) { apply(rows[k]); });
  }
}

// ---------------------------------------------------------------------------
// Labels

enum class OutputKind { multiclass, multilabel, multihead };

inline std::string_view to_string(OutputKind k) {
  switch (k) {
    case OutputKind::multiclass: return "mc";
    case OutputKind::multilabel: return "ml";
    case OutputKind::multihead: return "mh";
  }
  return "?";
}

inline OutputKind parse_output_kind(std::string_view s) {
  if (s == "mc") return OutputKind::multiclass;
  if (s == "ml") return OutputKind::multilabel;
  if (s == "mh") return OutputKind::multihead;
  throw std::invalid_argument("unknown output kind '" + std::string(s) + "'");
}

inline bool has_tactic_head(OutputKind k) { return k != OutputKind::multilabel; }
inline bool has_attribute_head(OutputKind k) { return k != OutputKind::multiclass; }

/// Vector form when `sequence_length` is 0, otherwise every instance's
/// labels are replicated along time (entries [n * T + t]).
struct LabelSet {
  OutputKind kind = OutputKind::multiclass;
  std::size_t sequence_length = 0;
  std::vector<int> tactic;                               // empty for multilabel
  std::vector<std::array<std::uint8_t, 2>> attributes;   // empty for multiclass
};

inline LabelSet make_labels(std::span<const int> tactic_ids, OutputKind kind, bool sequence = false,
                            std::size_t time_steps = 0) {
  if (sequence && time_steps == 0) throw std::invalid_argument("sequence labels need a positive length");
  LabelSet out;
  out.kind = kind;
  out.sequence_length = sequence ? time_steps : 0;
  const std::size_t reps = sequence ? time_steps : 1;
  for (int id : tactic_ids) {
    const TacticLabel label(id);  // throws on unknown ids
    for (std::size_t r = 0; r < reps; ++r) {
      if (has_tactic_head(kind)) out.tactic.push_back(label.id());
      if (has_attribute_head(kind)) out.attributes.push_back(label.attributes());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset container

struct BuildOptions {
  /// Observation window in steps; 0 keeps the full truncated length.
  std::size_t window = 0;
  double noise_factor = 0.0;
  std::uint64_t seed = 0;
  SplitSpec split{};
};

/// Raw (unnormalized) windowed features with labels, splits and the
/// training-split normalization statistics.
struct Dataset {
  FeatureTensor features;
  std::vector<int> tactics;
  Splits splits;
  NormStats stats;
  std::size_t n_attackers = 0;
  TruncationStats truncation;
  std::size_t window = 0;
  double noise_factor = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Seeds for the split shuffle and the noise draws, derived from one seed.
inline std::uint64_t split_seed(std::uint64_t seed) { return child_seed(seed, 0x5B17); }
inline std::uint64_t noise_seed(std::uint64_t seed) { return child_seed(seed, 0x7015E); }

inline Dataset build_dataset(std::span<const Trajectory> batch, const BuildOptions& opt) {
  auto [full, trunc] = truncate_to_shortest(batch);
  Dataset d;
  d.n_attackers = batch[0].n_attackers;
  d.truncation = trunc;
  d.seed = opt.seed;
  d.noise_factor = opt.noise_factor;
  for (const auto& t : batch) d.tactics.push_back(t.tactic.id());
  d.splits = split_shuffle(d.tactics, opt.split, split_seed(opt.seed));
  d.window = opt.window == 0 ? full.time : opt.window;
  d.features = window(full, d.window);
  add_noise(d.features, NoiseSpec{opt.noise_factor, 40.0, 1.0, noise_seed(opt.seed)});
  d.stats = NormStats::fit(d.features, d.splits.train);
  return d;
}

/// Shortens an already built dataset to its first `length` steps and refits
/// the normalization on the training split. Noise draws are laid out time
/// first, so this matches building with the shorter window directly.
inline Dataset rewindow(const Dataset& d, std::size_t length) {
  if (length == 0 || length == d.features.time) return d;
  Dataset out = d;
  out.features = window(d.features, length);
  out.window = length;
  out.stats = NormStats::fit(out.features, out.splits.train);
  return out;
}

inline void save_dataset(const std::string& path, const Dataset& d) {
  const nlohmann::json header = {
      {"kind", "dataset"},
      {"instances", d.features.instances},
      {"time_steps", d.features.time},
      {"features", d.features.features},
      {"n_attackers", d.n_attackers},
      {"window", d.window},
      {"noise_factor", d.noise_factor},
      {"seed", d.seed},
      {"truncation", {{"min", d.truncation.min_length}, {"max", d.truncation.max_length},
                      {"mean", d.truncation.mean_length}}},
      {"split_sizes", {d.splits.train.size(), d.splits.val.size(), d.splits.test.size()}},
      {"degenerate_features", d.stats.degenerate},
      {"layout", "f32 features[instances,time,features]; u8 tactic[instances]; u32 train/val/test indices; "
                 "f64 mean[features]; f64 std[features]"},
  };
  io::ContainerWriter w(path, header);
  w.write_array(std::span<const float>(d.features.data));
  std::vector<std::uint8_t> labels(d.tactics.begin(), d.tactics.end());
  w.write_array(std::span<const std::uint8_t>(labels));
  for (const auto* split : {&d.splits.train, &d.splits.val, &d.splits.test}) {
    std::vector<std::uint32_t> idx(split->begin(), split->end());
    w.write_array(std::span<const std::uint32_t>(idx));
  }
  w.write_array(std::span<const double>(d.stats.mean));
  w.write_array(std::span<const double>(d.stats.stddev));
  w.close();
}

inline Dataset load_dataset(const std::string& path) {
  io::ContainerReader r(path);
  r.expect_kind("dataset");
  const auto& h = r.header();
  Dataset d;
  try {
    const std::size_t n = h.at("instances"), t = h.at("time_steps"), f = h.at("features");
    d.n_attackers = h.at("n_attackers");
    d.window = h.at("window");
    d.noise_factor = h.at("noise_factor");
    d.seed = h.at("seed");
    d.truncation = {h.at("truncation").at("min"), h.at("truncation").at("max"), h.at("truncation").at("mean")};
    d.stats.degenerate = h.at("degenerate_features").get<std::vector<std::size_t>>();
    const auto sizes = h.at("split_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != 3) throw DataError("'" + path + "': split_sizes must have three entries");
    d.features = FeatureTensor(n, t, f);
    d.features.data = r.read_array<float>(n * t * f);
    const auto labels = r.read_array<std::uint8_t>(n);
    d.tactics.assign(labels.begin(), labels.end());
    std::vector<std::size_t>* splits[] = {&d.splits.train, &d.splits.val, &d.splits.test};
    for (int s = 0; s < 3; ++s) {
      const auto idx = r.read_array<std::uint32_t>(sizes[static_cast<std::size_t>(s)]);
      for (auto i : idx) {
        if (i >= n) throw DataError("'" + path + "': split index out of range");
        splits[s]->push_back(i);
      }
    }
    d.stats.mean = r.read_array<double>(f);
    d.stats.stddev = r.read_array<double>(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': bad dataset header: " + e.what());
  }
  for (int id : d.tactics) {
    if (id >= TacticLabel::kCount) throw DataError("'" + path + "': tactic label out of range");
  }
  r.expect_end();
  return d;
}

}  // namespace swarmtsc
