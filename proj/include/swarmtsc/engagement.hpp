#pragma once

// Swarm-vs-swarm engagement: attackers with thrust/drag dynamics chase
// constant-velocity defenders under one of four tactics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmtsc/rng.hpp"
#include "swarmtsc/tactic.hpp"
#include "swarmtsc/vec2.hpp"

namespace swarmtsc {

/// Attacker equation of motion: m r'' = K u(r_vl - r) - B r'.
struct AttackerParams {
  double mass = 10.0;
  double thrust = 1.0;
  double damping = 1.0;

  /// Terminal speed under constant thrust, K/B.
  [[nodiscard]] double max_speed() const noexcept { return thrust / damping; }
};

struct AttackerState {
  Vec2 position;
  Vec2 velocity;
  Vec2 virtual_leader;
  std::optional<std::size_t> target;
};

struct DefenderState {
  Vec2 position;
  double speed = 0.0;
  /// Radians clockwise from North: 0 is +y, pi/2 is +x.
  double heading = 0.0;
  bool alive = true;

  [[nodiscard]] Vec2 velocity() const noexcept {
    return {speed * std::sin(heading), speed * std::cos(heading)};
  }
};

struct EngagementConfig {
  std::size_t n_attackers = 10;
  std::size_t n_defenders = 10;
  double dt = 1.0;
  double weapons_range = 1.0;
  double attacker_spread = 5.0;
  double defender_spread = 5.0;
  double speed_fraction_lo = 0.05;
  double speed_fraction_hi = 0.40;
  Vec2 attacker_start_offset{40.0, 40.0};
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  TacticLabel tactic{};
  AttackerParams attacker{};

  void validate() const {
    if (n_attackers == 0 || n_defenders == 0) throw std::invalid_argument("agent counts must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(weapons_range > 0.0)) throw std::invalid_argument("weapons range must be positive");
    if (attacker_spread < 0.0 || defender_spread < 0.0) throw std::invalid_argument("spreads must be non-negative");
    if (!(speed_fraction_lo > 0.0 && speed_fraction_lo <= speed_fraction_hi && speed_fraction_hi < 1.0))
      throw std::invalid_argument("defender speed fractions must satisfy 0 < lo <= hi < 1");
    if (!(attacker.mass > 0.0 && attacker.thrust > 0.0 && attacker.damping > 0.0))
      throw std::invalid_argument("attacker mass, thrust and damping must be positive");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  }
};

struct InitialState {
  std::vector<AttackerState> attackers;
  std::vector<DefenderState> defenders;
  Rng rng;
};

namespace detail {
inline Vec2 polar_scatter(Rng& rng, Vec2 centroid, double spread) {
  const double radius = rng.uniform(0.0, spread);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return centroid + Vec2{radius * std::cos(angle), radius * std::sin(angle)};
}
}  // namespace detail

/// Draws defenders first (position, speed, heading), then attackers.
inline InitialState init_engagement(const EngagementConfig& config) {
  InitialState s{{}, {}, Rng(config.seed)};
  const double v_max = config.attacker.max_speed();
  s.defenders.reserve(config.n_defenders);
  for (std::size_t j = 0; j < config.n_defenders; ++j) {
    DefenderState d;
    d.position = detail::polar_scatter(s.rng, {0.0, 0.0}, config.defender_spread);
    d.speed = s.rng.uniform(config.speed_fraction_lo, config.speed_fraction_hi) * v_max;
    d.heading = s.rng.uniform(0.0, std::numbers::pi / 2.0);
    s.defenders.push_back(d);
  }
  s.attackers.reserve(config.n_attackers);
  for (std::size_t i = 0; i < config.n_attackers; ++i) {
    AttackerState a;
    a.position = detail::polar_scatter(s.rng, config.attacker_start_offset, config.attacker_spread);
    a.virtual_leader = a.position;
    s.attackers.push_back(a);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Aim points

inline Vec2 pursuit_aim(const DefenderState& target) noexcept { return target.position; }

/// Smallest positive T with |d + v T| = s T, where d is the target offset
/// from the attacker, v the target velocity and s the attacker speed.
inline std::optional<double> intercept_time(Vec2 offset, Vec2 target_velocity, double speed) {
  const double c = offset.norm2();
  if (c == 0.0) return 0.0;
  const double a = target_velocity.norm2() - speed * speed;
  const double b = 2.0 * offset.dot(target_velocity);
  const double scale = std::max({std::abs(a), speed * speed, 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (b >= 0.0) return std::nullopt;
    return -c / b;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  // Stable root pair: q = -(b + sign(b) sqrt(disc)) / 2, roots q/a and c/q.
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  std::optional<double> best;
  for (double t : {q / a, q != 0.0 ? c / q : -1.0}) {
    if (t > 0.0 && std::isfinite(t) && (!best || t < *best)) best = t;
  }
  return best;
}

struct InterceptResult {
  Vec2 point;
  bool fallback = false;
};

/// Constant-bearing intercept assuming the attacker flies at `v_max` and the
/// target holds its velocity. Falls back to the pursuit aim point when no
/// positive intercept time exists.
inline InterceptResult pronav_intercept(const AttackerState& attacker, const DefenderState& target,
                                        double v_max) {
  const Vec2 tv = target.velocity();
  const auto t = intercept_time(target.position - attacker.position, tv, v_max);
  if (!t) return {pursuit_aim(target), true};
  return {target.position + *t * tv, false};
}

// ---------------------------------------------------------------------------
// Target assignment. Both return one defender index per attacker; -1 only
// when no defender is alive. Distance ties go to the lowest index.

namespace detail {
inline std::size_t nearest_alive(Vec2 p, std::span<const Vec2> defenders, std::span<const std::uint8_t> alive) {
  std::size_t best = defenders.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < defenders.size(); ++j) {
    if (!alive[j]) continue;
    const double d = distance2(p, defenders[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

inline void assign_leftovers(std::vector<int>& targets, std::span<const Vec2> attackers,
                             std::span<const Vec2> defenders, std::span<const std::uint8_t> alive) {
  for (std::size_t i = 0; i < attackers.size(); ++i) {
    if (targets[i] >= 0) continue;
    const std::size_t j = nearest_alive(attackers[i], defenders, alive);
    targets[i] = j < defenders.size() ? static_cast<int>(j) : -1;
  }
}
}  // namespace detail

/// Each alive defender (in index order) claims its nearest attacker; a later
/// defender may take over an attacker claimed earlier. Attackers left
/// unclaimed chase their own nearest alive defender.
inline std::vector<int> greedy_assign(std::span<const Vec2> attackers, std::span<const Vec2> defenders,
                                      std::span<const std::uint8_t> alive) {
  std::vector<int> targets(attackers.size(), -1);
  for (std::size_t j = 0; j < defenders.size(); ++j) {
    if (!alive[j] || attackers.empty()) continue;
    std::size_t best = 0;
    double best_d = distance2(attackers[0], defenders[j]);
    for (std::size_t i = 1; i < attackers.size(); ++i) {
      const double d = distance2(attackers[i], defenders[j]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    targets[best] = static_cast<int>(j);
  }
  detail::assign_leftovers(targets, attackers, defenders, alive);
  return targets;
}

/// Each alive defender (in index order) takes the nearest attacker still in
/// the unassigned pool. Attackers left in the pool chase their nearest alive
/// defender.
inline std::vector<int> auction_assign(std::span<const Vec2> attackers, std::span<const Vec2> defenders,
                                       std::span<const std::uint8_t> alive) {
  std::vector<int> targets(attackers.size(), -1);
  std::vector<std::uint8_t> pooled(attackers.size(), 1);
  std::size_t remaining = attackers.size();
  for (std::size_t j = 0; j < defenders.size() && remaining > 0; ++j) {
    if (!alive[j]) continue;
    std::size_t best = attackers.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < attackers.size(); ++i) {
      if (!pooled[i]) continue;
      const double d = distance2(attackers[i], defenders[j]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    targets[best] = static_cast<int>(j);
    pooled[best] = 0;
    --remaining;
  }
  detail::assign_leftovers(targets, attackers, defenders, alive);
  return targets;
}

// ---------------------------------------------------------------------------
// Integration

/// One step of velocity Verlet split for linear drag: a half kick with the
/// thrust at the current position, an exact drag-drift over dt, then a half
/// kick with the thrust at the new position. Second order in dt.
inline void verlet_step(Vec2& position, Vec2& velocity, const AttackerParams& p, Vec2 aim, double dt) {
  const auto thrust_accel = [&](Vec2 r) -> Vec2 {
    const Vec2 d = aim - r;
    const double n = d.norm();
    if (n == 0.0) return {};
    return (p.thrust / (p.mass * n)) * d;
  };
  const double half = 0.5 * dt;
  velocity += half * thrust_accel(position);

  const double gamma = p.damping / p.mass;
  const double gdt = gamma * dt;
  if (gdt == 0.0) {
    position += dt * velocity;
  } else {
    const double decay = std::exp(-gdt);
    // Integral of exp(-gamma t) over [0, dt]; expm1 keeps small gdt accurate.
    const double travel = -std::expm1(-gdt) / gamma;
    position += travel * velocity;
    velocity *= decay;
  }
  velocity += half * thrust_accel(position);
}

/// Kills every alive defender with an attacker strictly inside `range`.
/// Returns the number of new kills.
inline std::size_t survival_update(std::vector<DefenderState>& defenders, std::span<const AttackerState> attackers,
                                   double range) {
  const double r2 = range * range;
  std::size_t kills = 0;
  for (auto& d : defenders) {
    if (!d.alive) continue;
    for (const auto& a : attackers) {
      if (distance2(d.position, a.position) < r2) {
        d.alive = false;
        ++kills;
        break;
      }
    }
  }
  return kills;
}

// ---------------------------------------------------------------------------
// Full engagement

struct AgentSample {
  float px = 0.0f;
  float py = 0.0f;
  float vx = 0.0f;
  float vy = 0.0f;
  friend bool operator==(const AgentSample&, const AgentSample&) = default;
};

/// Recorded attacker states, one row of N_A samples per time index
/// (t = 0 is the initial state), plus defender survival at each index.
struct Trajectory {
  TacticLabel tactic{};
  std::size_t n_attackers = 0;
  std::size_t n_defenders = 0;
  std::size_t steps = 0;
  std::vector<AgentSample> attackers;   // steps * n_attackers
  std::vector<std::uint8_t> alive;      // steps * n_defenders
  bool truncated = false;
  // In-memory diagnostics only; not serialized.
  std::vector<int> targets;             // (steps - 1) * n_attackers, assignment used to leave index t
  std::size_t pronav_fallbacks = 0;

  [[nodiscard]] const AgentSample& at(std::size_t t, std::size_t i) const { return attackers[t * n_attackers + i]; }
  [[nodiscard]] bool defender_alive(std::size_t t, std::size_t j) const { return alive[t * n_defenders + j] != 0; }
  [[nodiscard]] std::span<const int> targets_at(std::size_t t) const {
    return std::span<const int>(targets).subspan(t * n_attackers, n_attackers);
  }
};

/// Step-by-step engagement driver. run_engagement() wraps it.
class Engagement {
 public:
  explicit Engagement(const EngagementConfig& config) : config_(config) {
    config_.validate();
    auto init = init_engagement(config_);
    attackers_ = std::move(init.attackers);
    defenders_ = std::move(init.defenders);
    for (const auto& d : defenders_) origins_.push_back(d.position);
  }

  [[nodiscard]] const EngagementConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::span<const AttackerState> attackers() const noexcept { return attackers_; }
  [[nodiscard]] std::span<const DefenderState> defenders() const noexcept { return defenders_; }
  [[nodiscard]] std::size_t time_index() const noexcept { return t_; }
  [[nodiscard]] std::size_t pronav_fallbacks() const noexcept { return fallbacks_; }

  [[nodiscard]] std::size_t alive_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(defenders_.begin(), defenders_.end(),
                                                  [](const DefenderState& d) { return d.alive; }));
  }

  /// Target assignment for the current positions under the configured tactic.
  [[nodiscard]] std::vector<int> assign() const {
    std::vector<Vec2> ap, dp;
    std::vector<std::uint8_t> alive;
    ap.reserve(attackers_.size());
    for (const auto& a : attackers_) ap.push_back(a.position);
    for (const auto& d : defenders_) {
      dp.push_back(d.position);
      alive.push_back(d.alive ? 1 : 0);
    }
    return config_.tactic.comms() ? auction_assign(ap, dp, alive) : greedy_assign(ap, dp, alive);
  }

  /// assign -> aim -> move attackers -> move defenders -> kill check.
  /// Returns the assignment that was used.
  std::vector<int> step() {
    auto targets = assign();
    const double v_max = config_.attacker.max_speed();
    for (std::size_t i = 0; i < attackers_.size(); ++i) {
      auto& a = attackers_[i];
      if (targets[i] < 0) {
        a.target.reset();
      } else {
        const auto& d = defenders_[static_cast<std::size_t>(targets[i])];
        a.target = static_cast<std::size_t>(targets[i]);
        if (config_.tactic.pronav()) {
          const auto r = pronav_intercept(a, d, v_max);
          a.virtual_leader = r.point;
          fallbacks_ += r.fallback ? 1 : 0;
        } else {
          a.virtual_leader = pursuit_aim(d);
        }
      }
      verlet_step(a.position, a.velocity, config_.attacker, a.virtual_leader, config_.dt);
    }
    ++t_;
    const double elapsed = static_cast<double>(t_) * config_.dt;
    for (std::size_t j = 0; j < defenders_.size(); ++j) {
      defenders_[j].position = origins_[j] + elapsed * defenders_[j].velocity();
    }
    survival_update(defenders_, attackers_, config_.weapons_range);
    return targets;
  }

 private:
  EngagementConfig config_;
  std::vector<AttackerState> attackers_;
  std::vector<DefenderState> defenders_;
  std::vector<Vec2> origins_;
  std::size_t t_ = 0;
  std::size_t fallbacks_ = 0;
};

inline Trajectory run_engagement(const EngagementConfig& config) {
  Engagement eng(config);
  Trajectory traj;
  traj.tactic = config.tactic;
  traj.n_attackers = config.n_attackers;
  traj.n_defenders = config.n_defenders;

  const auto record = [&] {
    for (const auto& a : eng.attackers()) {
      traj.attackers.push_back({static_cast<float>(a.position.x), static_cast<float>(a.position.y),
                                static_cast<float>(a.velocity.x), static_cast<float>(a.velocity.y)});
    }
    for (const auto& d : eng.defenders()) traj.alive.push_back(d.alive ? 1 : 0);
    ++traj.steps;
  };

  record();
  while (eng.alive_count() > 0 && traj.steps < config.max_steps) {
    const auto used = eng.step();
    traj.targets.insert(traj.targets.end(), used.begin(), used.end());
    record();
  }
  traj.truncated = eng.alive_count() > 0;
  traj.pronav_fallbacks = eng.pronav_fallbacks();
  return traj;
}

}  // namespace swarmtsc
