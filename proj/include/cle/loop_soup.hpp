#pragma once

// Random-walk loop soup on a finite lattice domain.
//
// Each rooted nearest-neighbour loop of length n carries mass 4^-n / n. A soup of
// intensity c is a Poisson process with intensity c times this measure, restricted
// to loops whose sites all lie in the allowed set.
//
// Sampling proposes loops from the free-lattice measure (root uniform on the allowed
// set, length from the free mass profile, shape a uniform closed walk built from two
// independent +-1 bridges in rotated coordinates) and keeps those that stay inside
// the allowed set. Thinning a Poisson process this way yields exactly the restricted
// soup; loop_measure_table computes the restricted masses independently by dynamic
// programming over killed walks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cle/grid.hpp"
#include "cle/kappa.hpp"
#include "cle/rng.hpp"

namespace cle {

class LatticeDomain {
 public:
  LatticeDomain() = default;

  /// `allowed` is indexed in local coordinates; global cell = origin + local.
  LatticeDomain(double delta, CellMask allowed, Cell origin = {0, 0})
      : delta_(delta), origin_(origin), allowed_(std::move(allowed)) {
    if (!(delta_ > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
    if (count_cells(allowed_) == 0) throw std::invalid_argument("allowed set must be non-empty");
  }

  static LatticeDomain rectangle(int width, int height, double delta) {
    return LatticeDomain(delta, CellMask(width, height, 1));
  }

  double delta() const noexcept { return delta_; }
  Cell origin() const noexcept { return origin_; }
  int width() const noexcept { return allowed_.width(); }
  int height() const noexcept { return allowed_.height(); }
  const CellMask& allowed() const noexcept { return allowed_; }
  double extent_x() const noexcept { return width() * delta_; }
  double extent_y() const noexcept { return height() * delta_; }

  bool allows(Cell global) const noexcept { return allowed_.get_or(global - origin_, 0) != 0; }

  /// Allowed cells in global coordinates, row-major.
  std::vector<Cell> allowed_cells() const {
    std::vector<Cell> out = mask_cells(allowed_);
    for (Cell& c : out) c = c + origin_;
    return out;
  }

  bool operator==(const LatticeDomain&) const = default;

 private:
  double delta_ = 1.0;
  Cell origin_{0, 0};
  CellMask allowed_;
};

struct LatticeLoop {
  Cell root;
  std::vector<Dir> steps;

  std::size_t length() const noexcept { return steps.size(); }

  /// Visited sites in walk order, starting at the root; the closing return is omitted.
  std::vector<Cell> sites() const {
    std::vector<Cell> out;
    out.reserve(steps.size());
    Cell c = root;
    for (Dir d : steps) {
      out.push_back(c);
      c = c + step(d);
    }
    return out;
  }

  bool closed() const noexcept {
    Cell c = root;
    for (Dir d : steps) c = c + step(d);
    return c == root && !steps.empty() && steps.size() % 2 == 0;
  }

  bool operator==(const LatticeLoop&) const = default;
};

/// Mass of all rooted loops of length n at one root of the free lattice Z^2:
/// (C(n, n/2) / 2^n)^2 / n.
inline double free_loop_mass(int n) {
  if (n < 2 || n % 2 != 0) return 0.0;
  double a = 0.5;  // C(2,1)/4
  for (int m = 2; m < n; m += 2) a *= static_cast<double>(m + 1) / static_cast<double>(m + 2);
  return a * a / n;
}

/// Upper bound on the per-root mass of loops longer than lmax: sum over even n > lmax
/// of 2/(pi n^2), bounded by 1/(pi lmax).
inline double truncated_mass_bound(int lmax) { return 1.0 / (std::numbers::pi * lmax); }

inline void check_lmax(int lmax) {
  if (lmax < 4 || lmax % 2 != 0)
    throw std::invalid_argument("lmax must be an even integer >= 4, got " + std::to_string(lmax));
}

/// Restricted rooted-loop masses: mass(root, n) = (# loops of length n rooted at root inside
/// the allowed set) * 4^-n / n, for even n in [2, lmax].
class MassTable {
 public:
  MassTable() = default;
  MassTable(int lmax, std::vector<Cell> roots, std::vector<double> masses)
      : lmax_(lmax), roots_(std::move(roots)), masses_(std::move(masses)) {
    for (double m : masses_) total_ += m;
  }

  int lmax() const noexcept { return lmax_; }
  const std::vector<Cell>& roots() const noexcept { return roots_; }
  std::size_t lengths() const noexcept { return static_cast<std::size_t>(lmax_ / 2); }

  double mass(std::size_t root, int n) const {
    if (n < 2 || n > lmax_ || n % 2 != 0) return 0.0;
    return masses_[root * lengths() + static_cast<std::size_t>(n / 2 - 1)];
  }

  double root_total(std::size_t root) const {
    double s = 0.0;
    for (std::size_t k = 0; k < lengths(); ++k) s += masses_[root * lengths() + k];
    return s;
  }

  double total() const noexcept { return total_; }

 private:
  int lmax_ = 0;
  std::vector<Cell> roots_;
  std::vector<double> masses_;
  double total_ = 0.0;
};

/// Work limit (cell-steps) for the dynamic program behind loop_measure_table.
inline constexpr double kMassTableWorkLimit = 4e9;

/// Exact restricted masses. Counts are propagated as probabilities of the walk killed on
/// leaving the allowed set (one division by 4 per step), which keeps every entry in [0, 1].
inline MassTable loop_measure_table(const LatticeDomain& domain, int lmax) {
  check_lmax(lmax);
  const CellMask& allowed = domain.allowed();
  const std::vector<Cell> local_roots = mask_cells(allowed);
  const int reach = lmax / 2;

  const double work = static_cast<double>(local_roots.size()) * std::min(allowed.width(), 2 * reach + 1) *
                      std::min(allowed.height(), 2 * reach + 1) * lmax;
  if (work > kMassTableWorkLimit)
    throw std::length_error("loop_measure_table: domain too large for exact dynamic programming");

  const std::size_t lengths = static_cast<std::size_t>(lmax / 2);
  std::vector<double> masses(local_roots.size() * lengths, 0.0);
  for (std::size_t r = 0; r < local_roots.size(); ++r) {
    const Cell z = local_roots[r];
    const int x0 = std::max(0, z.x - reach), x1 = std::min(allowed.width() - 1, z.x + reach);
    const int y0 = std::max(0, z.y - reach), y1 = std::min(allowed.height() - 1, z.y + reach);
    const int w = x1 - x0 + 1, h = y1 - y0 + 1;
    Grid<double> cur(w, h, 0.0), next(w, h, 0.0);
    cur(z.x - x0, z.y - y0) = 1.0;
    for (int n = 1; n <= lmax; ++n) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!allowed(x + x0, y + y0)) {
            next(x, y) = 0.0;
            continue;
          }
          double s = 0.0;
          if (x > 0) s += cur(x - 1, y);
          if (x + 1 < w) s += cur(x + 1, y);
          if (y > 0) s += cur(x, y - 1);
          if (y + 1 < h) s += cur(x, y + 1);
          next(x, y) = 0.25 * s;
        }
      std::swap(cur, next);
      if (n % 2 == 0) masses[r * lengths + static_cast<std::size_t>(n / 2 - 1)] = cur(z.x - x0, z.y - y0) / n;
    }
  }
  std::vector<Cell> roots = local_roots;
  for (Cell& c : roots) c = c + domain.origin();
  return MassTable(lmax, std::move(roots), std::move(masses));
}

struct LoopSoupSample {
  KappaParams params;
  LatticeDomain domain;
  std::uint64_t seed = 0;
  int lmax = 0;
  std::vector<LatticeLoop> loops;
  std::uint64_t proposed = 0;  // free-lattice proposals before restriction

  bool operator==(const LoopSoupSample&) const = default;
};

namespace detail {

inline std::uint64_t soup_count_stream(std::uint64_t seed) { return derive_seed(seed, 0xC0C0C0C0ULL); }
inline std::uint64_t soup_loop_stream(std::uint64_t seed, std::uint64_t i) { return derive_seed(seed, i + 1); }

/// Direction from the rotated-coordinate increments (du, dv), u = x + y, v = x - y.
inline Dir dir_from_uv(bool u_up, bool v_up) {
  if (u_up) return v_up ? Dir::East : Dir::North;
  return v_up ? Dir::South : Dir::West;
}

}  // namespace detail

/// Cumulative free masses for even lengths 2..lmax (index n/2 - 1).
inline std::vector<double> free_mass_cumulative(int lmax) {
  check_lmax(lmax);
  std::vector<double> cum(static_cast<std::size_t>(lmax / 2));
  double a = 0.5, acc = 0.0;
  for (int n = 2; n <= lmax; n += 2) {
    if (n > 2) a *= static_cast<double>(n - 1) / static_cast<double>(n);
    acc += a * a / n;
    cum[static_cast<std::size_t>(n / 2 - 1)] = acc;
  }
  return cum;
}

/// Draws one loop proposal from the free measure and returns it if it stays in `domain`.
/// `allowed_cells` must be domain.allowed_cells(); `cum` must be free_mass_cumulative(lmax).
inline std::optional<LatticeLoop> propose_loop(const LatticeDomain& domain, std::span<const Cell> allowed_cells,
                                               std::span<const double> cum, CounterRng& rng) {
  const Cell root = allowed_cells[rng.below(allowed_cells.size())];
  const double target = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
  const int n = 2 * static_cast<int>(k + 1);

  LatticeLoop loop{root, {}};
  loop.steps.reserve(static_cast<std::size_t>(n));
  std::uint64_t u_up = static_cast<std::uint64_t>(n / 2), v_up = u_up;
  Cell c = root;
  for (int t = 0; t < n; ++t) {
    const auto remaining = static_cast<std::uint64_t>(n - t);
    const bool du = rng.below(remaining) < u_up;
    const bool dv = rng.below(remaining) < v_up;
    u_up -= du ? 1 : 0;
    v_up -= dv ? 1 : 0;
    const Dir d = detail::dir_from_uv(du, dv);
    c = c + step(d);
    if (!domain.allows(c)) return std::nullopt;
    loop.steps.push_back(d);
  }
  return loop;
}

/// Loop soup of intensity params.c in `domain`, truncated at length lmax.
/// Bit-exact for fixed (params, domain, lmax, seed).
inline LoopSoupSample sample_loop_soup(const KappaParams& params, const LatticeDomain& domain, int lmax,
                                       std::uint64_t seed) {
  const std::vector<double> cum = free_mass_cumulative(lmax);
  const std::vector<Cell> cells = domain.allowed_cells();
  const double free_total = static_cast<double>(cells.size()) * cum.back();

  LoopSoupSample out{params, domain, seed, lmax, {}, 0};
  CounterRng count_rng(detail::soup_count_stream(seed));
  out.proposed = count_rng.poisson(params.c * free_total);
  for (std::uint64_t i = 0; i < out.proposed; ++i) {
    CounterRng rng(detail::soup_loop_stream(seed, i));
    if (auto loop = propose_loop(domain, cells, cum, rng)) out.loops.push_back(std::move(*loop));
  }
  return out;
}

}  // namespace cle
