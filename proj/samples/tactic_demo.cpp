// Runs the four tactics from one initialization and prints how each one
// spreads its step-0 targets and how long it takes to clear the defenders.
//
//   tactic_demo [seed]

#include <cstdio>
#include <cstdlib>

#include "swarmtsc/compare.hpp"

int main(int argc, char** argv) {
  using namespace swarmtsc;
  EngagementConfig base;
  base.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;

  const auto runs = compare_tactics(base);
  Engagement probe(base);
  const auto nearest = nearest_defenders(probe.attackers(), probe.defenders());

  std::printf("%-9s %6s %12s %10s\n", "tactic", "steps", "dup@step0", "nearest@0");
  for (const auto& r : runs) {
    const auto& t0 = r.targets.front();
    std::size_t same = 0;
    for (std::size_t i = 0; i < t0.size(); ++i) same += t0[i] == nearest[i] ? 1 : 0;
    std::printf("%-9s %6zu %12zu %7zu/%zu\n", std::string(r.tactic.name()).c_str(), r.steps - 1,
                duplicated_targets(t0), same, t0.size());
  }
}
