#pragma once

// Exact invariant suite. Every property is asserted with zero tolerance; a property fails if
// any instance violates it.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "cle/carpet.hpp"
#include "cle/estimators.hpp"
#include "cle/io.hpp"
#include "cle/mfpp.hpp"

namespace cle {

struct PropertyResult {
  explicit PropertyResult(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool passed() const noexcept { return instances > 0 && failures == 0; }

  void record(bool ok, const std::string& what) {
    ++instances;
    if (ok) return;
    if (failures++ == 0) first_failure = what;
  }
};

struct CheckOptions {
  double kappa = 3.0;
  int grid = 64;
  int depth_limit = 2;
  std::size_t ensembles = 8;
  std::size_t mask_instances = 300;
  std::size_t max_mask_cells = 20;
  std::uint64_t seed = 1;
};

/// A cell set moved to the positive quadrant, with its tight mask.
struct PlacedSet {
  CellMask mask;
  std::vector<Cell> cells;  // local coordinates
};

inline PlacedSet place(std::span<const Cell> cells, Cell margin = {0, 0}) {
  int x0 = cells[0].x, y0 = cells[0].y, x1 = x0, y1 = y0;
  for (Cell c : cells) {
    x0 = std::min(x0, c.x);
    y0 = std::min(y0, c.y);
    x1 = std::max(x1, c.x);
    y1 = std::max(y1, c.y);
  }
  PlacedSet p{CellMask(x1 - x0 + 1 + 2 * margin.x, y1 - y0 + 1 + 2 * margin.y, 0), {}};
  for (Cell c : cells) {
    const Cell l = c - Cell{x0, y0} + margin;
    p.mask[l] = 1;
    p.cells.push_back(l);
  }
  return p;
}

namespace detail {

inline std::string describe(std::uint64_t seed, std::size_t i) {
  return "instance " + std::to_string(i) + " (seed " + std::to_string(seed) + ")";
}

inline std::optional<double> surrogate_distance(const CellMask& m, const DiscreteDisk& disk, Cell x, Cell y) {
  const auto g = mfpp_distance(m, disk, x, y);
  return g ? std::optional<double>(g->area) : std::nullopt;
}

/// Innermost loop containing each cell, found by scanning every loop (deepest wins).
inline Grid<std::int32_t> brute_labels(const NestedEnsemble& ens) {
  const LatticeDomain& dom = ens.domain;
  Grid<std::int32_t> out(dom.width(), dom.height(), CarpetMask::kOuterCarpet);
  for (int y = 0; y < dom.height(); ++y)
    for (int x = 0; x < dom.width(); ++x) {
      const Cell g = Cell{x, y} + dom.origin();
      if (!dom.allows(g)) {
        out(x, y) = CarpetMask::kOutsideDomain;
        continue;
      }
      int best_depth = -1;
      for (const CleLoop& l : ens.loops)
        if (l.depth > best_depth && l.interior.contains(g)) {
          best_depth = l.depth;
          out(x, y) = l.id;
        }
    }
  return out;
}

}  // namespace detail

/// Upper bound on surrogate / exact over every mask inside a side x side box and every pair
/// of cells in one component, found by enumerating simple paths of the box.
///
/// For a mask K with exact minimiser P (a simple path from x to y) the hop distance in K is at
/// most the hop distance inside the cells of P, which is at most len(P). Hence
///   surrogate / exact <= (|disk| + m * hops_P) / |union over P|,   m = marginal cells,
/// and the maximum of the right side over all simple paths bounds every mask. A path whose own
/// cell set admits a cheaper path is no minimiser of any superset and is skipped; that test
/// runs the exact oracle and only happens when the hop bound exceeds `target`.
struct RatioCertificate {
  int side = 0;
  double eps_cells = 0.0;
  double max_bound = 1.0;          // certified upper bound on surrogate / exact
  std::uint64_t paths = 0;         // simple paths examined (start cells up to symmetry)
  std::uint64_t hop_refined = 0;   // paths where len(P) alone gave a bound above target
  std::uint64_t oracle_calls = 0;  // paths also needing the exact oracle
  std::uint64_t non_minimisers = 0;
  std::vector<Cell> worst_path;    // path attaining max_bound
};

inline RatioCertificate certify_surrogate_ratio(int side, const DiscreteDisk& disk, double target = 2.0) {
  if (side < 1 || side > 8) throw std::invalid_argument("certify_surrogate_ratio: side must lie in [1, 8]");
  RatioCertificate cert;
  cert.side = side;
  cert.eps_cells = disk.radius();
  const int r = disk.reach(), pad = side + 2 * r, n = side * side;
  const auto area = static_cast<double>(disk.area_cells()), marginal = static_cast<double>(disk.marginal_cells());
  std::vector<int> offsets;
  for (Cell o : disk.offsets()) offsets.push_back(o.y * pad + o.x);
  std::vector<int> cover(static_cast<std::size_t>(pad * pad), 0);
  std::vector<std::uint8_t> on(static_cast<std::size_t>(n), 0);
  std::vector<int> path, dist(static_cast<std::size_t>(n)), queue(static_cast<std::size_t>(n));
  int covered = 0;

  auto place = [&](int c, int sign) {
    const int base = (c / side + r) * pad + c % side + r;
    for (int o : offsets) {
      int& k = cover[static_cast<std::size_t>(base + o)];
      if (sign > 0 && k++ == 0) ++covered;
      if (sign < 0 && --k == 0) --covered;
    }
  };
  // Hop distance between the path's endpoints using only the path's cells.
  auto inner_hops = [&]() {
    std::fill(dist.begin(), dist.end(), -1);
    std::size_t head = 0, tail = 0;
    dist[static_cast<std::size_t>(path.front())] = 0;
    queue[tail++] = path.front();
    while (head < tail) {
      const int c = queue[head++];
      if (c == path.back()) break;
      const int x = c % side, y = c / side;
      const int nb[4] = {x + 1 < side ? c + 1 : -1, x > 0 ? c - 1 : -1, y + 1 < side ? c + side : -1, y > 0 ? c - side : -1};
      for (int m : nb)
        if (m >= 0 && on[static_cast<std::size_t>(m)] && dist[static_cast<std::size_t>(m)] < 0) {
          dist[static_cast<std::size_t>(m)] = dist[static_cast<std::size_t>(c)] + 1;
          queue[tail++] = m;
        }
    }
    return dist[static_cast<std::size_t>(path.back())];
  };
  auto record = [&](double bound) {
    if (bound <= cert.max_bound) return;
    cert.max_bound = bound;
    cert.worst_path.clear();
    for (int c : path) cert.worst_path.push_back({c % side, c / side});
  };
  auto visit = [&](auto&& self, int c) -> void {
    ++cert.paths;
    const double u = static_cast<double>(covered);
    double bound = (area + marginal * static_cast<double>(path.size() - 1)) / u;
    if (bound > target) {
      ++cert.hop_refined;
      bound = (area + marginal * inner_hops()) / u;
      if (bound > target) {
        ++cert.oracle_calls;
        CellMask m(side, side, 0);
        for (int k = 0; k < n; ++k) m.at_index(static_cast<std::size_t>(k)) = on[static_cast<std::size_t>(k)];
        const Cell a{path.front() % side, path.front() / side}, b{c % side, c / side};
        const double exact_cells = *mfpp_distance_exact(m, disk, a, b) / disk.cell_area();
        if (exact_cells < u - 0.5) {
          ++cert.non_minimisers;
          bound = 0.0;
        }
      }
    }
    record(bound);
    const int x = c % side, y = c / side;
    const int nb[4] = {x + 1 < side ? c + 1 : -1, x > 0 ? c - 1 : -1, y + 1 < side ? c + side : -1, y > 0 ? c - side : -1};
    for (int m : nb) {
      if (m < 0 || on[static_cast<std::size_t>(m)]) continue;
      on[static_cast<std::size_t>(m)] = 1;
      place(m, +1);
      path.push_back(m);
      self(self, m);
      path.pop_back();
      place(m, -1);
      on[static_cast<std::size_t>(m)] = 0;
    }
  };
  // Every path is congruent under the square's symmetries to one starting in this triangle.
  const int half = (side + 1) / 2;
  for (int y = 0; y < half; ++y)
    for (int x = y; x < half; ++x) {
      const int c = y * side + x;
      on[static_cast<std::size_t>(c)] = 1;
      place(c, +1);
      path.assign(1, c);
      visit(visit, c);
      place(c, -1);
      on[static_cast<std::size_t>(c)] = 0;
    }
  return cert;
}

/// Runs the full suite; results are in a fixed order.
inline std::vector<PropertyResult> run_property_suite(const CheckOptions& opt) {
  PropertyResult mono{"mfpp_monotone_under_inclusion"}, trans{"mfpp_translation_invariance"},
      rescale{"mfpp_delta_rescaling"}, dominate{"mfpp_surrogate_dominates_exact"}, sym{"mfpp_symmetry"},
      local{"mfpp_locality"}, parity{"parity_alternation"}, partition{"carpet_partition"},
      complement{"upsilon_coin_complement"}, nesting{"loop_nesting"}, idem{"outermost_filter_idempotence"},
      polygon{"boundary_polygon_roundtrip"};

  // MFPP properties on random lattice animals.
  const double base_delta = 1.0 / 256.0;
  const double eps_units[] = {1.0, 1.5, 2.0};
  const auto corpus = random_connected_corpus(opt.mask_instances, opt.max_mask_cells, derive_seed(opt.seed, 0xA11));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CounterRng rng(derive_seed(opt.seed, 0xB00 + i));
    const PlacedSet a = place(corpus[i], {1, 1});
    const Cell x = a.cells[rng.below(a.cells.size())];
    const Cell y = a.cells[rng.below(a.cells.size())];
    const double eps = eps_units[i % 3] * base_delta;
    const DiscreteDisk disk(eps, base_delta);
    const auto sa = detail::surrogate_distance(a.mask, disk, x, y);
    const auto ea = mfpp_distance_exact(a.mask, disk, x, y);
    const std::string tag = detail::describe(opt.seed, i);
    if (!sa || !ea) {
      mono.record(false, tag + ": connected set reported disconnected");
      continue;
    }

    // Superset: add frame cells while staying within the exact oracle's size limit.
    CellMask b = a.mask;
    std::size_t added = 0;
    for (std::size_t k = 0; k < 6 && count_cells(b) < kExactOracleMaxCells; ++k) {
      const Cell c{static_cast<int>(rng.below(static_cast<std::uint64_t>(b.width()))),
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(b.height())))};
      if (!b[c]) {
        b[c] = 1;
        ++added;
      }
    }
    const auto sb = detail::surrogate_distance(b, disk, x, y);
    const auto eb = mfpp_distance_exact(b, disk, x, y);
    mono.record(sb && eb && *sb <= *sa && *eb <= *ea, tag + ": distance grew after adding " + std::to_string(added) + " cells");

    const Cell shift{static_cast<int>(1 + rng.below(5)), static_cast<int>(1 + rng.below(5))};
    CellMask moved(a.mask.width() + shift.x, a.mask.height() + shift.y, 0);
    for (Cell c : mask_cells(a.mask)) moved[c + shift] = 1;
    const auto st = detail::surrogate_distance(moved, disk, x + shift, y + shift);
    const auto et = mfpp_distance_exact(moved, disk, x + shift, y + shift);
    trans.record(st && et && *st == *sa && *et == *ea, tag + ": value changed under translation");

    for (double r : {0.5, 2.0, 4.0}) {
      const DiscreteDisk scaled(r * eps, r * base_delta);
      const auto sr = detail::surrogate_distance(a.mask, scaled, x, y);
      const auto er = mfpp_distance_exact(a.mask, scaled, x, y);
      rescale.record(sr && er && *sr == r * r * *sa && *er == r * r * *ea,
                     tag + ": rescaling by " + detail::format_real(r) + " is not exact");
    }

    dominate.record(*sa >= *ea, tag + ": surrogate " + detail::format_real(*sa) + " < exact " + detail::format_real(*ea));

    // Cropping to a window that still holds the witness leaves the value unchanged.
    const auto g = mfpp_distance(a.mask, disk, x, y);
    int wx0 = x.x, wy0 = x.y, wx1 = x.x, wy1 = x.y;
    for (Cell c : g->witness.cells) {
      wx0 = std::min(wx0, c.x);
      wy0 = std::min(wy0, c.y);
      wx1 = std::max(wx1, c.x);
      wy1 = std::max(wy1, c.y);
    }
    const Cell w0{wx0, wy0};
    CellMask crop(wx1 - wx0 + 1, wy1 - wy0 + 1, 0);
    for (int cy = 0; cy < crop.height(); ++cy)
      for (int cx = 0; cx < crop.width(); ++cx) crop(cx, cy) = a.mask[Cell{cx, cy} + w0];
    const auto sc = detail::surrogate_distance(crop, disk, x - w0, y - w0);
    local.record(sc && *sc == *sa, tag + ": value depends on cells outside the witness window");

    const auto sy = detail::surrogate_distance(a.mask, disk, y, x);
    const auto ey = mfpp_distance_exact(a.mask, disk, y, x);
    sym.record(sy && ey && *sy == *sa && *ey == *ea, tag + ": d(x, y) != d(y, x)");
  }

  // Ensemble properties.
  const KappaParams params = KappaParams::from_kappa(opt.kappa);
  const LatticeDomain dom = LatticeDomain::rectangle(opt.grid, opt.grid, 1.0 / opt.grid);
  const long long area = static_cast<long long>(opt.grid) * opt.grid;
  const int lmax = static_cast<int>(std::max<long long>(4, area + area % 2));
  for (std::size_t e = 0; e < opt.ensembles; ++e) {
    const std::uint64_t seed = derive_seed(opt.seed, 0xE000 + e);
    const NestedEnsemble ens = nest_ensemble(params, dom, opt.depth_limit, lmax, seed);
    const std::string tag = "ensemble seed " + std::to_string(seed);

    bool alt = parity_alternates(ens);
    for (int coin : {0, 1}) {
      const NestedEnsemble marked = mark_parity(ens, coin);
      alt = alt && parity_alternates(marked);
      for (const CleLoop& l : marked.loops)
        if (l.parent == kNoParent && l.parity != coin) alt = false;
    }
    parity.record(alt, tag + ": parities do not alternate");

    const CarpetMask cm = build_carpet_mask(ens);
    bool part = cm.label == detail::brute_labels(ens);
    std::size_t covered = 0;
    for (std::int32_t id = CarpetMask::kOuterCarpet; id < static_cast<std::int32_t>(ens.loops.size()); ++id)
      covered += count_cells(cm.piece(id));
    part = part && covered == count_cells(dom.allowed());
    for (std::size_t i = 0; i < cm.label.size(); ++i) {
      const std::int32_t id = cm.label.at_index(i);
      const bool expect = id >= 0 && ens.loops[static_cast<std::size_t>(id)].parity == 0;
      if ((cm.upsilon.at_index(i) != 0) != expect) part = false;
    }
    partition.record(part, tag + ": carpet pieces do not partition the domain");

    const CarpetMask dual = build_carpet_mask(mark_parity(ens, 1));
    bool comp = true;
    for (std::size_t i = 0; i < cm.label.size(); ++i) {
      const bool in_piece = cm.label.at_index(i) >= 0;
      const bool a0 = cm.upsilon.at_index(i) != 0, a1 = dual.upsilon.at_index(i) != 0;
      if ((a0 && a1) || (a0 || a1) != in_piece) comp = false;
    }
    complement.record(comp, tag + ": swapping the coin does not give the complementary carpet");

    bool nested = true;
    for (const CleLoop& l : ens.loops) {
      if (l.parent != kNoParent) {
        const CleLoop& p = ens.loops[static_cast<std::size_t>(l.parent)];
        for (Cell c : l.interior.cells())
          if (!p.interior.contains(c)) nested = false;
      }
      for (const CleLoop& m : ens.loops) {
        if (m.id <= l.id || m.parent != l.parent) continue;
        for (Cell c : m.interior.cells())
          if (l.interior.contains(c)) nested = false;
      }
    }
    nesting.record(nested, tag + ": child outside parent or siblings overlap");

    std::vector<CleLoop> top;
    for (const CleLoop& l : ens.loops)
      if (l.parent == kNoParent) top.push_back(l);
    const std::vector<CleLoop> once = outermost_filter(ens.loops, dom);
    const std::vector<CleLoop> twice = outermost_filter(once, dom);
    idem.record(once == twice && outermost_filter(top, dom) == top && once == top,
                tag + ": outermost filter is not idempotent");

    bool poly = true;
    for (const CleLoop& l : ens.loops)
      if (!(polygon_interior(l.boundary) == l.interior) || trace_boundary(l.interior) != l.boundary) poly = false;
    polygon.record(poly, tag + ": polygon and interior disagree");
  }

  return {mono, trans, rescale, dominate, sym, local, parity, partition, complement, nesting, idem, polygon};
}

}  // namespace cle
