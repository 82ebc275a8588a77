#pragma once

// epsilon-Minkowski first passage percolation on cell masks.
//
// The area of the eps-neighbourhood of a lattice path is approximated by the surrogate
// delta^2 * (|disk| + hops * marginal), where `marginal` is the number of cells a unit
// step adds to the disk. Along any path each step adds at most `marginal` new cells, so
// the surrogate of the shortest-hop path bounds the true minimum from above; minimising
// it is an unweighted shortest path problem. mfpp_distance_exact is the brute-force
// reference on small masks.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "cle/grid.hpp"

namespace cle {

/// Cell offsets whose centres lie within eps/delta of the origin (inclusive).
class DiscreteDisk {
 public:
  DiscreteDisk(double eps, double delta) : eps_(eps), delta_(delta) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    radius_ = eps / delta;
    radius_cells_ = static_cast<int>(std::lround(radius_));
    // Relative slack so that rescaling eps and delta together never changes membership.
    const double r2 = radius_ * radius_ * (1.0 + 1e-9);
    reach_ = static_cast<int>(std::floor(radius_ * (1.0 + 1e-9)));
    for (int dy = -reach_; dy <= reach_; ++dy)
      for (int dx = -reach_; dx <= reach_; ++dx)
        if (dx * dx + dy * dy <= r2) offsets_.push_back({dx, dy});
    // Every row of the disk is an interval, so one step adds one cell per row.
    marginal_ = static_cast<std::size_t>(2 * reach_ + 1);
  }

  double eps() const noexcept { return eps_; }
  double delta() const noexcept { return delta_; }
  double radius() const noexcept { return radius_; }
  int radius_cells() const noexcept { return radius_cells_; }
  int reach() const noexcept { return reach_; }
  const std::vector<Cell>& offsets() const noexcept { return offsets_; }
  std::size_t area_cells() const noexcept { return offsets_.size(); }
  std::size_t marginal_cells() const noexcept { return marginal_; }

  double cell_area() const noexcept { return delta_ * delta_; }

  /// Surrogate area of a path with `hops` unit steps.
  double surrogate(std::size_t hops) const noexcept {
    return cell_area() * (static_cast<double>(area_cells()) + static_cast<double>(hops) * static_cast<double>(marginal_));
  }

 private:
  double eps_;
  double delta_;
  double radius_ = 0.0;
  int radius_cells_ = 0;
  int reach_ = 0;
  std::vector<Cell> offsets_;
  std::size_t marginal_ = 1;
};

/// Plane area of the union of eps-disks around `cells`, counted on the unbounded grid.
inline double neighborhood_area(std::span<const Cell> cells, double eps, double delta) {
  const DiscreteDisk disk(eps, delta);
  if (cells.empty()) return 0.0;
  int x0 = cells[0].x, x1 = x0, y0 = cells[0].y, y1 = y0;
  for (Cell c : cells) {
    x0 = std::min(x0, c.x);
    x1 = std::max(x1, c.x);
    y0 = std::min(y0, c.y);
    y1 = std::max(y1, c.y);
  }
  const int r = disk.reach();
  const Cell base{x0 - r, y0 - r};
  CellMask cover(x1 - x0 + 2 * r + 1, y1 - y0 + 2 * r + 1, 0);
  std::size_t n = 0;
  for (Cell c : cells)
    for (Cell o : disk.offsets()) {
      std::uint8_t& v = cover[c + o - base];
      if (!v) {
        v = 1;
        ++n;
      }
    }
  return disk.cell_area() * static_cast<double>(n);
}

struct PathWitness {
  std::vector<Cell> cells;
  std::size_t hops = 0;
  double area = 0.0;  // surrogate area of this path
};

struct Geodesic {
  double area = 0.0;
  PathWitness witness;
};

namespace detail {

inline void require_in_mask(const CellMask& mask, Cell c, const char* what) {
  if (!mask.contains(c) || !mask[c]) throw std::invalid_argument(std::string(what) + " must lie in the mask");
}

/// Walks from `from` down a hop field towards its zero set, taking the first decreasing
/// direction in East, North, West, South order.
inline std::vector<Cell> descend(const Grid<std::int32_t>& hops, Cell from) {
  std::vector<Cell> path{from};
  Cell c = from;
  while (hops[c] > 0) {
    for (Cell s : kSteps) {
      const Cell n = c + s;
      if (hops.contains(n) && hops[n] == hops[c] - 1) {
        c = n;
        break;
      }
    }
    path.push_back(c);
  }
  return path;
}

}  // namespace detail

/// Surrogate MFPP distance and its witness path; nullopt when y is unreachable from x.
inline std::optional<Geodesic> mfpp_distance(const CellMask& mask, const DiscreteDisk& disk, Cell x, Cell y) {
  detail::require_in_mask(mask, x, "x");
  detail::require_in_mask(mask, y, "y");
  const Cell target[1] = {y};
  const Grid<std::int32_t> to_y = bfs_hops(mask, target);
  if (to_y[x] == kUnreached) return std::nullopt;
  Geodesic g;
  g.witness.cells = detail::descend(to_y, x);
  g.witness.hops = static_cast<std::size_t>(to_y[x]);
  g.area = disk.surrogate(g.witness.hops);
  g.witness.area = g.area;
  return g;
}

inline std::optional<Geodesic> mfpp_distance(const CellMask& mask, double eps, double delta, Cell x, Cell y) {
  return mfpp_distance(mask, DiscreteDisk(eps, delta), x, y);
}

inline constexpr std::size_t kExactOracleMaxCells = 40;

/// Exact minimum of neighborhood_area over 4-connected paths from x to y inside the mask.
/// The neighbourhood of a path depends only on its visited set, so the search runs over
/// (visited set, current cell) states with branch-and-bound on the area.
inline std::optional<double> mfpp_distance_exact(const CellMask& mask, const DiscreteDisk& disk, Cell x, Cell y) {
  detail::require_in_mask(mask, x, "x");
  detail::require_in_mask(mask, y, "y");
  const std::vector<Cell> cells = mask_cells(mask);
  if (cells.size() > kExactOracleMaxCells)
    throw std::length_error("mfpp_distance_exact: mask has more than 40 cells");

  Grid<std::int32_t> index(mask.width(), mask.height(), -1);
  for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i]] = static_cast<std::int32_t>(i);
  const auto xi = static_cast<std::size_t>(index[x]);
  const auto yi = static_cast<std::size_t>(index[y]);

  const int r = disk.reach();
  const int uw = mask.width() + 2 * r, uh = mask.height() + 2 * r;
  const std::size_t words = (static_cast<std::size_t>(uw) * static_cast<std::size_t>(uh) + 63) / 64;
  std::vector<std::uint64_t> cover(cells.size() * words, 0);
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (Cell o : disk.offsets()) {
      const Cell u = cells[i] + o + Cell{r, r};
      const std::size_t bit = static_cast<std::size_t>(u.y) * static_cast<std::size_t>(uw) + static_cast<std::size_t>(u.x);
      cover[i * words + bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
  std::vector<std::vector<std::size_t>> adj(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (Cell s : kSteps) {
      const Cell n = cells[i] + s;
      if (index.contains(n) && index[n] >= 0) adj[i].push_back(static_cast<std::size_t>(index[n]));
    }

  auto popcount = [&](std::span<const std::uint64_t> u) {
    std::size_t n = 0;
    for (std::uint64_t w : u) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  };

  // Upper bound from the shortest-hop path.
  std::size_t best = std::numeric_limits<std::size_t>::max();
  if (const auto g = mfpp_distance(mask, disk, x, y)) {
    std::vector<std::uint64_t> u(words, 0);
    for (Cell c : g->witness.cells)
      for (std::size_t w = 0; w < words; ++w) u[w] |= cover[static_cast<std::size_t>(index[c]) * words + w];
    best = popcount(u);
  } else {
    return std::nullopt;
  }

  std::unordered_set<std::uint64_t> seen;
  std::vector<std::uint64_t> stack_union((cells.size() + 1) * words, 0);
  for (std::size_t w = 0; w < words; ++w) stack_union[w] = cover[xi * words + w];

  // Depth-first search; frame k holds the union after k+1 visited cells.
  struct Frame {
    std::size_t cell;
    std::uint64_t visited;
    std::size_t next_edge;
  };
  std::vector<Frame> frames{{xi, std::uint64_t{1} << xi, 0}};
  std::vector<std::uint64_t> probe(words);
  while (!frames.empty()) {
    Frame& f = frames.back();
    const std::size_t depth = frames.size() - 1;
    std::span<const std::uint64_t> cur(stack_union.data() + depth * words, words);
    if (f.next_edge == 0) {
      if (f.cell == yi) {
        best = std::min(best, popcount(cur));
        frames.pop_back();
        continue;
      }
      for (std::size_t w = 0; w < words; ++w) probe[w] = cur[w] | cover[yi * words + w];
      if (popcount(probe) >= best) {
        frames.pop_back();
        continue;
      }
    }
    if (f.next_edge >= adj[f.cell].size()) {
      frames.pop_back();
      continue;
    }
    const std::size_t n = adj[f.cell][f.next_edge++];
    if (f.visited & (std::uint64_t{1} << n)) continue;
    const std::uint64_t visited = f.visited | (std::uint64_t{1} << n);
    if (!seen.insert(visited | (static_cast<std::uint64_t>(n) << 40)).second) continue;
    std::uint64_t* dst = stack_union.data() + (depth + 1) * words;
    for (std::size_t w = 0; w < words; ++w) dst[w] = cur[w] | cover[n * words + w];
    frames.push_back({n, visited, 0});
  }
  return disk.cell_area() * static_cast<double>(best);
}

inline std::optional<double> mfpp_distance_exact(const CellMask& mask, double eps, double delta, Cell x, Cell y) {
  return mfpp_distance_exact(mask, DiscreteDisk(eps, delta), x, y);
}

/// Surrogate distances from a source set.
class EpsMetricField {
 public:
  EpsMetricField(const CellMask& mask, const DiscreteDisk& disk, std::vector<Cell> sources)
      : disk_(disk), sources_(std::move(sources)), hops_(bfs_hops(mask, sources_)) {}

  const DiscreteDisk& disk() const noexcept { return disk_; }
  const std::vector<Cell>& sources() const noexcept { return sources_; }
  const Grid<std::int32_t>& hops() const noexcept { return hops_; }
  int width() const noexcept { return hops_.width(); }
  int height() const noexcept { return hops_.height(); }

  bool reachable(Cell c) const noexcept { return hops_.contains(c) && hops_[c] != kUnreached; }

  std::optional<double> value(Cell c) const noexcept {
    if (!reachable(c)) return std::nullopt;
    return disk_.surrogate(static_cast<std::size_t>(hops_[c]));
  }

  std::size_t reachable_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(hops_.data().begin(), hops_.data().end(),
                                                  [](std::int32_t h) { return h != kUnreached; }));
  }

  /// Minimum value over `targets`, nullopt if none is reachable.
  std::optional<double> min_over(std::span<const Cell> targets) const {
    std::optional<std::int32_t> best;
    for (Cell t : targets)
      if (reachable(t) && (!best || hops_[t] < *best)) best = hops_[t];
    if (!best) return std::nullopt;
    return disk_.surrogate(static_cast<std::size_t>(*best));
  }

 private:
  DiscreteDisk disk_;
  std::vector<Cell> sources_;
  Grid<std::int32_t> hops_;
};

inline EpsMetricField distance_field(const CellMask& mask, const DiscreteDisk& disk, std::vector<Cell> sources) {
  for (Cell s : sources) detail::require_in_mask(mask, s, "source");
  return EpsMetricField(mask, disk, std::move(sources));
}

namespace detail {

inline std::int32_t eccentricity(const CellMask& comp, Cell from, Cell* farthest = nullptr) {
  const Cell src[1] = {from};
  const Grid<std::int32_t> d = bfs_hops(comp, src);
  std::int32_t best = 0;
  Cell arg = from;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.at_index(i) > best) {
      best = d.at_index(i);
      arg = d.cell(i);
    }
  if (farthest) *farthest = arg;
  return best;
}

}  // namespace detail

inline constexpr std::size_t kAllPairsDiameterLimit = 200;

/// Hop diameter by breadth-first search from every cell.
inline std::int32_t hop_diameter_all_pairs(const CellMask& comp) {
  std::int32_t best = 0;
  for (Cell c : mask_cells(comp)) best = std::max(best, detail::eccentricity(comp, c));
  return best;
}

/// Hop diameter of a connected cell set. Small sets use all pairs; larger sets start from
/// double sweeps out of the extremal cells and are certified by iterative fringe upper
/// bounds (iFUB), which keeps the result exact.
inline std::int32_t hop_diameter(const CellMask& comp) {
  const std::vector<Cell> cells = mask_cells(comp);
  if (cells.empty()) throw std::invalid_argument("hop_diameter: empty component");
  if (cells.size() <= kAllPairsDiameterLimit) return hop_diameter_all_pairs(comp);

  Cell ext[4] = {cells.front(), cells.front(), cells.front(), cells.front()};
  for (Cell c : cells) {
    if (c.x < ext[0].x) ext[0] = c;
    if (c.x > ext[1].x) ext[1] = c;
    if (c.y < ext[2].y) ext[2] = c;
    if (c.y > ext[3].y) ext[3] = c;
  }
  std::int32_t lower = 0;
  Cell a{}, b{};
  std::int32_t best_sweep = -1;
  for (Cell seed : ext) {
    Cell u{}, w{};
    detail::eccentricity(comp, seed, &u);
    const std::int32_t e = detail::eccentricity(comp, u, &w);
    lower = std::max(lower, e);
    if (e > best_sweep) {
      best_sweep = e;
      a = u;
      b = w;
    }
  }
  // Centre of the longest sweep path as the iFUB root.
  const Cell src_b[1] = {b};
  const Grid<std::int32_t> from_b = bfs_hops(comp, src_b);
  std::vector<Cell> path = detail::descend(from_b, a);
  const Cell root = path[path.size() / 2];
  const Cell src_root[1] = {root};
  const Grid<std::int32_t> level = bfs_hops(comp, src_root);
  std::int32_t ecc_root = 0;
  for (std::int32_t v : level.data()) ecc_root = std::max(ecc_root, v);
  std::vector<std::vector<Cell>> fringe(static_cast<std::size_t>(ecc_root) + 1);
  for (std::size_t i = 0; i < level.size(); ++i)
    if (level.at_index(i) >= 0) fringe[static_cast<std::size_t>(level.at_index(i))].push_back(level.cell(i));
  lower = std::max(lower, ecc_root);
  for (std::int32_t i = ecc_root; i > 0; --i) {
    if (lower >= 2 * i) break;
    std::int32_t bi = 0;
    for (Cell z : fringe[static_cast<std::size_t>(i)]) bi = std::max(bi, detail::eccentricity(comp, z));
    lower = std::max(lower, bi);
    if (lower > 2 * (i - 1)) break;
  }
  return lower;
}

/// Largest surrogate distance between two cells of a connected set.
inline double component_diameter(const CellMask& comp, const DiscreteDisk& disk) {
  return disk.surrogate(static_cast<std::size_t>(hop_diameter(comp)));
}

/// Cells whose centre distance from `center` (cell units) lies within half a cell of `radius`.
inline std::vector<Cell> circle_band(int width, int height, double cx, double cy, double radius) {
  std::vector<Cell> out;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + radius + 1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      if (d >= radius - 0.5 && d <= radius + 0.5) out.push_back({x, y});
    }
  return out;
}

/// Minimum surrogate distance between the discretised circles of radius r_in and r_out
/// (plane units) around `center` (cell coordinates), through the mask.
inline std::optional<double> annulus_crossing(const CellMask& mask, const DiscreteDisk& disk, double cx, double cy,
                                              double r_in, double r_out) {
  if (!(r_in > 0.0 && r_in < r_out)) throw std::invalid_argument("annulus_crossing: need 0 < r_in < r_out");
  const double delta = disk.delta();
  std::vector<Cell> inner = circle_band(mask.width(), mask.height(), cx, cy, r_in / delta);
  std::vector<Cell> outer = circle_band(mask.width(), mask.height(), cx, cy, r_out / delta);
  std::erase_if(inner, [&](Cell c) { return !mask[c]; });
  std::erase_if(outer, [&](Cell c) { return !mask[c]; });
  if (inner.empty() || outer.empty()) return std::nullopt;
  const EpsMetricField field(mask, disk, std::move(inner));
  return field.min_over(outer);
}

}  // namespace cle
