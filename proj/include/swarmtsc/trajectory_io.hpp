#pragma once

#include <string>
#include <vector>

#include "swarmtsc/container.hpp"
#include "swarmtsc/engagement.hpp"
#include "swarmtsc/parallel.hpp"
#include "swarmtsc/rng.hpp"

namespace swarmtsc {

inline nlohmann::json to_json(const EngagementConfig& c) {
  return {
      {"n_attackers", c.n_attackers},
      {"n_defenders", c.n_defenders},
      {"dt", c.dt},
      {"weapons_range", c.weapons_range},
      {"attacker_spread", c.attacker_spread},
      {"defender_spread", c.defender_spread},
      {"speed_fraction_lo", c.speed_fraction_lo},
      {"speed_fraction_hi", c.speed_fraction_hi},
      {"attacker_start_offset", {c.attacker_start_offset.x, c.attacker_start_offset.y}},
      {"max_steps", c.max_steps},
      {"seed", c.seed},
      {"tactic", std::string(c.tactic.name())},
      {"mass", c.attacker.mass},
      {"thrust", c.attacker.thrust},
      {"damping", c.attacker.damping},
  };
}

/// Seed of instance `index` of a tactic's batch. Tactics draw from disjoint
/// streams, so batches generated with one master seed do not share initial
/// conditions across tactics.
inline std::uint64_t instance_seed(std::uint64_t master, TacticLabel tactic, std::size_t index) {
  return child_seed(child_seed(master, static_cast<std::uint64_t>(tactic.id())), index);
}

/// Runs `instances` engagements of `base.tactic`; instance k uses
/// instance_seed(master, tactic, k), so results do not depend on threading.
inline std::vector<Trajectory> simulate_batch(const EngagementConfig& base, std::size_t instances,
                                              std::uint64_t master_seed, unsigned threads = 0) {
  base.validate();
  std::vector<Trajectory> out(instances);
  parallel_for(
      instances,
      [&](std::size_t k) {
        EngagementConfig c = base;
        c.seed = instance_seed(master_seed, base.tactic, k);
        out[k] = run_engagement(c);
      },
      threads);
  return out;
}

/// Equal-count batches of all four tactics, tactic-major order.
inline std::vector<Trajectory> simulate_all_tactics(EngagementConfig base, std::size_t per_tactic,
                                                    std::uint64_t master_seed, unsigned threads = 0) {
  std::vector<Trajectory> all;
  all.reserve(per_tactic * TacticLabel::kCount);
  for (int id = 0; id < TacticLabel::kCount; ++id) {
    base.tactic = TacticLabel(id);
    auto batch = simulate_batch(base, per_tactic, master_seed, threads);
    std::move(batch.begin(), batch.end(), std::back_inserter(all));
  }
  return all;
}

/// Payload per instance: f32 [T, N_A, 4] (Px, Py, Vx, Vy) then u8 [T, N_D]
/// defender alive flags.
inline void save_trajectories(const std::string& path, std::span<const Trajectory> batch,
                              const nlohmann::json& config_echo = nlohmann::json::object()) {
  if (batch.empty()) throw DataError("refusing to write an empty trajectory batch");
  nlohmann::json steps = nlohmann::json::array(), tactics = nlohmann::json::array(),
                 truncated = nlohmann::json::array();
  for (const auto& t : batch) {
    if (t.n_attackers != batch[0].n_attackers || t.n_defenders != batch[0].n_defenders)
      throw DataError("trajectory batch mixes swarm sizes");
    steps.push_back(t.steps);
    tactics.push_back(t.tactic.id());
    truncated.push_back(t.truncated);
  }
  const nlohmann::json header = {
      {"kind", "trajectories"},
      {"instances", batch.size()},
      {"n_attackers", batch[0].n_attackers},
      {"n_defenders", batch[0].n_defenders},
      {"steps", steps},
      {"tactics", tactics},
      {"truncated", truncated},
      {"config", config_echo},
  };
  io::ContainerWriter w(path, header);
  for (const auto& t : batch) {
    static_assert(sizeof(AgentSample) == 4 * sizeof(float));
    std::vector<float> flat;
    flat.reserve(t.attackers.size() * 4);
    for (const auto& s : t.attackers) flat.insert(flat.end(), {s.px, s.py, s.vx, s.vy});
    w.write_array(std::span<const float>(flat));
    w.write_array(std::span<const std::uint8_t>(t.alive));
  }
  w.close();
}

struct TrajectoryBatch {
  std::vector<Trajectory> trajectories;
  nlohmann::json header;
};

inline TrajectoryBatch load_trajectories(const std::string& path) {
  io::ContainerReader r(path);
  r.expect_kind("trajectories");
  const auto& h = r.header();
  TrajectoryBatch out;
  out.header = h;
  try {
    const std::size_t n = h.at("instances");
    const std::size_t na = h.at("n_attackers");
    const std::size_t nd = h.at("n_defenders");
    out.trajectories.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      auto& t = out.trajectories[k];
      t.n_attackers = na;
      t.n_defenders = nd;
      t.steps = h.at("steps").at(k);
      t.tactic = TacticLabel(h.at("tactics").at(k).get<int>());
      t.truncated = h.at("truncated").at(k);
      const auto flat = r.read_array<float>(t.steps * na * 4);
      t.attackers.resize(t.steps * na);
      for (std::size_t s = 0; s < t.attackers.size(); ++s) {
        t.attackers[s] = {flat[4 * s], flat[4 * s + 1], flat[4 * s + 2], flat[4 * s + 3]};
      }
      t.alive = r.read_array<std::uint8_t>(t.steps * nd);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "': bad trajectory header: " + e.what());
  } catch (const std::out_of_range& e) {
    throw DataError("'" + path + "': " + e.what());
  }
  r.expect_end();
  return out;
}

}  // namespace swarmtsc
