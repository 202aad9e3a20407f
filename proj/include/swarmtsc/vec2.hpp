#pragma once

#include <cmath>

namespace swarmtsc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) noexcept { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) noexcept { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) noexcept { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) noexcept { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator*(Vec2 v, double s) noexcept { return {s * v.x, s * v.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  [[nodiscard]] constexpr double dot(Vec2 o) const noexcept { return x * o.x + y * o.y; }
  [[nodiscard]] constexpr double norm2() const noexcept { return dot(*this); }
  [[nodiscard]] double norm() const noexcept { return std::hypot(x, y); }
  [[nodiscard]] bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Vec2 a, Vec2 b) noexcept { return (a - b).norm(); }
constexpr double distance2(Vec2 a, Vec2 b) noexcept { return (a - b).norm2(); }

}  // namespace swarmtsc
