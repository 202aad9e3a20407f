#pragma once

// Side-by-side runs of all four tactics from one shared initialization, for
// plotting formations over time.

#include <array>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "swarmtsc/engagement.hpp"

namespace swarmtsc {

struct ComparisonRow {
  int tactic = 0;
  std::size_t t = 0;
  char role = 'A';  // 'A' attacker, 'D' defender
  std::size_t index = 0;
  Vec2 position;
  Vec2 velocity;
  int target = -1;  // attackers: defender targeted during step t; -1 after the last step
  bool alive = true;
};

struct TacticRun {
  TacticLabel tactic{0};
  std::vector<ComparisonRow> rows;
  /// Targets used at each step, [step][attacker].
  std::vector<std::vector<int>> targets;
  std::size_t steps = 0;  // recorded states, initial one included
};

/// Runs one tactic from `base` (seed included), recording every agent.
inline TacticRun record_tactic(EngagementConfig base, TacticLabel tactic) {
  base.tactic = tactic;
  Engagement e(base);
  TacticRun run;
  run.tactic = tactic;
  const auto snapshot = [&](const std::vector<int>& targets) {
    const std::size_t t = e.time_index();
    for (std::size_t i = 0; i < e.attackers().size(); ++i) {
      const auto& a = e.attackers()[i];
      run.rows.push_back({tactic.id(), t, 'A', i, a.position, a.velocity, targets.empty() ? -1 : targets[i], true});
    }
    for (std::size_t j = 0; j < e.defenders().size(); ++j) {
      const auto& d = e.defenders()[j];
      run.rows.push_back({tactic.id(), t, 'D', j, d.position, d.velocity(), -1, d.alive});
    }
    ++run.steps;
  };
  while (e.alive_count() > 0 && run.steps + 1 < base.max_steps) {
    const auto targets = e.assign();
    snapshot(targets);
    run.targets.push_back(targets);
    e.step();
  }
  snapshot({});
  return run;
}

inline std::array<TacticRun, TacticLabel::kCount> compare_tactics(const EngagementConfig& base) {
  std::array<TacticRun, TacticLabel::kCount> out;
  for (int id = 0; id < TacticLabel::kCount; ++id) out[static_cast<std::size_t>(id)] = record_tactic(base, TacticLabel(id));
  return out;
}

/// Index of each attacker's nearest defender (lowest index on ties).
inline std::vector<int> nearest_defenders(std::span<const AttackerState> attackers,
                                          std::span<const DefenderState> defenders) {
  std::vector<int> out;
  for (const auto& a : attackers) {
    int best = -1;
    double bd = 0.0;
    for (std::size_t j = 0; j < defenders.size(); ++j) {
      if (!defenders[j].alive) continue;
      const double d = distance2(a.position, defenders[j].position);
      if (best < 0 || d < bd) {
        best = static_cast<int>(j);
        bd = d;
      }
    }
    out.push_back(best);
  }
  return out;
}

/// Number of attackers sharing a target with an earlier attacker.
inline std::size_t duplicated_targets(std::span<const int> targets) {
  std::size_t dup = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (targets[k] == targets[i]) {
        ++dup;
        break;
      }
    }
  }
  return dup;
}

inline void write_comparison_csv(std::ostream& os, std::span<const TacticRun> runs) {
  os << "tactic,t,role,index,x,y,vx,vy,target,alive\n";
  char buf[256];
  for (const auto& run : runs) {
    for (const auto& r : run.rows) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%c,%zu,%.6f,%.6f,%.6f,%.6f,%d,%d\n",
                    std::string(TacticLabel(r.tactic).name()).c_str(), r.t, r.role, r.index, r.position.x,
                    r.position.y, r.velocity.x, r.velocity.y, r.target, r.alive ? 1 : 0);
      os << buf;
    }
  }
}

}  // namespace swarmtsc
