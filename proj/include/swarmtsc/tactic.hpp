#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace swarmtsc {

/// One of the four swarm tactics. The id encodes the two binary attributes
/// as id = 2*comms + pronav:
///   0 Greedy [0,0], 1 Greedy+ [0,1], 2 Auction [1,0], 3 Auction+ [1,1].
class TacticLabel {
 public:
  static constexpr int kCount = 4;

  constexpr TacticLabel() = default;
  constexpr explicit TacticLabel(int id) : id_(id) {
    if (id < 0 || id >= kCount) throw std::out_of_range("tactic id must be in [0, 3]");
  }
  static constexpr TacticLabel from_attributes(bool comms, bool pronav) {
    return TacticLabel((comms ? 2 : 0) + (pronav ? 1 : 0));
  }

  [[nodiscard]] constexpr int id() const noexcept { return id_; }
  [[nodiscard]] constexpr bool comms() const noexcept { return (id_ & 2) != 0; }
  [[nodiscard]] constexpr bool pronav() const noexcept { return (id_ & 1) != 0; }
  [[nodiscard]] constexpr std::array<std::uint8_t, 2> attributes() const noexcept {
    return {static_cast<std::uint8_t>(comms()), static_cast<std::uint8_t>(pronav())};
  }

  [[nodiscard]] constexpr std::string_view name() const noexcept {
    constexpr std::array<std::string_view, kCount> names{"greedy", "greedy+", "auction", "auction+"};
    return names[static_cast<std::size_t>(id_)];
  }

  static std::optional<TacticLabel> parse(std::string_view s) {
    for (int i = 0; i < kCount; ++i) {
      if (TacticLabel(i).name() == s) return TacticLabel(i);
    }
    return std::nullopt;
  }

  friend constexpr bool operator==(TacticLabel, TacticLabel) = default;

 private:
  int id_ = 0;
};

}  // namespace swarmtsc
