#pragma once

// Grid primitives shared by the engine, the planners and the cognitive model.

#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pigchase {

struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

// Expansion / enumeration order everywhere is N, E, S, W.
enum class Orientation : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

inline constexpr std::array<Orientation, 4> kAllOrientations = {
    Orientation::N, Orientation::E, Orientation::S, Orientation::W};

enum class ArrowKey : std::uint8_t { Up, Down, Left, Right };

inline constexpr std::array<ArrowKey, 4> kAllKeys = {ArrowKey::Up, ArrowKey::Down,
                                                     ArrowKey::Left, ArrowKey::Right};

struct Pose {
  Cell cell;
  Orientation facing = Orientation::N;

  friend constexpr bool operator==(const Pose&, const Pose&) = default;
};

constexpr Cell offset(Orientation o) {
  switch (o) {
    case Orientation::N: return {-1, 0};
    case Orientation::E: return {0, 1};
    case Orientation::S: return {1, 0};
    case Orientation::W: return {0, -1};
  }
  return {0, 0};
}

constexpr Cell step(Cell c, Orientation o) {
  const Cell d = offset(o);
  return {c.row + d.row, c.col + d.col};
}

constexpr int manhattan(Cell a, Cell b) {
  return (a.row > b.row ? a.row - b.row : b.row - a.row) +
         (a.col > b.col ? a.col - b.col : b.col - a.col);
}

constexpr bool adjacent(Cell a, Cell b) { return manhattan(a, b) == 1; }

// N -> W -> S -> E -> N
constexpr Orientation anticlockwise(Orientation o) {
  switch (o) {
    case Orientation::N: return Orientation::W;
    case Orientation::W: return Orientation::S;
    case Orientation::S: return Orientation::E;
    case Orientation::E: return Orientation::N;
  }
  return o;
}

constexpr Orientation key_direction(ArrowKey k) {
  switch (k) {
    case ArrowKey::Up: return Orientation::N;
    case ArrowKey::Down: return Orientation::S;
    case ArrowKey::Left: return Orientation::W;
    case ArrowKey::Right: return Orientation::E;
  }
  return Orientation::N;
}

constexpr ArrowKey key_for(Orientation o) {
  switch (o) {
    case Orientation::N: return ArrowKey::Up;
    case Orientation::S: return ArrowKey::Down;
    case Orientation::W: return ArrowKey::Left;
    case Orientation::E: return ArrowKey::Right;
  }
  return ArrowKey::Up;
}

// Direction of the single step from a to an adjacent b.
inline std::optional<Orientation> direction_between(Cell a, Cell b) {
  for (Orientation o : kAllOrientations) {
    if (step(a, o) == b) return o;
  }
  return std::nullopt;
}

inline std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::N: return "N";
    case Orientation::E: return "E";
    case Orientation::S: return "S";
    case Orientation::W: return "W";
  }
  return "?";
}

inline std::string_view to_string(ArrowKey k) {
  switch (k) {
    case ArrowKey::Up: return "Up";
    case ArrowKey::Down: return "Down";
    case ArrowKey::Left: return "Left";
    case ArrowKey::Right: return "Right";
  }
  return "?";
}

inline std::optional<Orientation> parse_orientation(std::string_view s) {
  if (s == "N") return Orientation::N;
  if (s == "E") return Orientation::E;
  if (s == "S") return Orientation::S;
  if (s == "W") return Orientation::W;
  return std::nullopt;
}

// Accepts "Up"/"ArrowUp"/"up" style names.
inline std::optional<ArrowKey> parse_key(std::string_view s) {
  if (s.starts_with("Arrow")) s.remove_prefix(5);
  std::string lower(s);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "up") return ArrowKey::Up;
  if (lower == "down") return ArrowKey::Down;
  if (lower == "left") return ArrowKey::Left;
  if (lower == "right") return ArrowKey::Right;
  return std::nullopt;
}

}  // namespace pigchase

template <>
struct std::hash<pigchase::Cell> {
  std::size_t operator()(const pigchase::Cell& c) const noexcept {
    return std::hash<int>()(c.row * 1024 + c.col);
  }
};
