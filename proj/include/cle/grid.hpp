#pragma once

// Lattice primitives shared by every module: cells, unit steps, dense grids,
// cell masks and breadth-first hop distances.

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace cle {

struct Cell {
  int x = 0;
  int y = 0;
  constexpr auto operator<=>(const Cell&) const = default;
  constexpr Cell operator+(const Cell& o) const { return {x + o.x, y + o.y}; }
  constexpr Cell operator-(const Cell& o) const { return {x - o.x, y - o.y}; }
};

/// Unit steps in tie-break priority order: East, North, West, South.
enum class Dir : std::uint8_t { East = 0, North = 1, West = 2, South = 3 };

inline constexpr std::array<Cell, 4> kSteps{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

constexpr Cell step(Dir d) { return kSteps[static_cast<std::size_t>(d)]; }
constexpr Dir opposite(Dir d) { return static_cast<Dir>((static_cast<int>(d) + 2) & 3); }

template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked(width)) * static_cast<std::size_t>(checked(height)), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool contains(Cell c) const noexcept { return contains(c.x, c.y); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  std::size_t index(Cell c) const noexcept { return index(c.x, c.y); }
  Cell cell(std::size_t i) const noexcept {
    return {static_cast<int>(i % static_cast<std::size_t>(width_)),
            static_cast<int>(i / static_cast<std::size_t>(width_))};
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
  T& operator[](Cell c) noexcept { return data_[index(c)]; }
  const T& operator[](Cell c) const noexcept { return data_[index(c)]; }
  T& at_index(std::size_t i) noexcept { return data_[i]; }
  const T& at_index(std::size_t i) const noexcept { return data_[i]; }

  /// Value at c, or `outside` when c lies off the grid.
  T get_or(Cell c, T outside) const noexcept { return contains(c) ? (*this)[c] : outside; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  static int checked(int n) {
    if (n < 0) throw std::invalid_argument("grid dimensions must be non-negative");
    return n;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using CellMask = Grid<std::uint8_t>;

inline std::size_t count_cells(const CellMask& m) {
  return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(),
                                                 [](std::uint8_t v) { return v != 0; }));
}

inline std::vector<Cell> mask_cells(const CellMask& m) {
  std::vector<Cell> out;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) out.push_back({x, y});
  return out;
}

inline CellMask mask_from_cells(int width, int height, std::span<const Cell> cells) {
  CellMask m(width, height, 0);
  for (Cell c : cells) {
    if (!m.contains(c)) throw std::out_of_range("cell outside mask grid");
    m[c] = 1;
  }
  return m;
}

/// Axis-aligned box of cells [x0, x1) x [y0, y1).
struct CellRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(Cell c) const noexcept { return c.x >= x0 && c.x < x1 && c.y >= y0 && c.y < y1; }
  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool operator==(const CellRect&) const = default;
};

inline constexpr std::int32_t kUnreached = -1;

/// Hop distances from `sources` through 4-adjacent cells of `mask`.
/// Sources outside the mask are ignored; unreachable cells hold kUnreached.
inline Grid<std::int32_t> bfs_hops(const CellMask& mask, std::span<const Cell> sources) {
  Grid<std::int32_t> dist(mask.width(), mask.height(), kUnreached);
  std::vector<std::size_t> queue;
  queue.reserve(sources.size());
  for (Cell s : sources) {
    if (!mask.contains(s) || !mask[s] || dist[s] == 0) continue;
    dist[s] = 0;
    queue.push_back(dist.index(s));
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Cell c = dist.cell(queue[head]);
    const std::int32_t d = dist[c];
    for (Cell s : kSteps) {
      const Cell n = c + s;
      if (!mask.contains(n) || !mask[n] || dist[n] != kUnreached) continue;
      dist[n] = d + 1;
      queue.push_back(dist.index(n));
    }
  }
  return dist;
}

/// 4-connected component labels of the set cells; returns the number of components.
/// Labels are assigned in row-major order of each component's first cell.
inline int label_components(const CellMask& mask, Grid<std::int32_t>& labels) {
  labels = Grid<std::int32_t>(mask.width(), mask.height(), -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.at_index(i) || labels.at_index(i) != -1) continue;
    labels.at_index(i) = next;
    stack.push_back(i);
    while (!stack.empty()) {
      const Cell c = mask.cell(stack.back());
      stack.pop_back();
      for (Cell s : kSteps) {
        const Cell n = c + s;
        if (!mask.contains(n) || !mask[n] || labels[n] != -1) continue;
        labels[n] = next;
        stack.push_back(mask.index(n));
      }
    }
    ++next;
  }
  return next;
}

}  // namespace cle
