#pragma once

// From a loop soup to CLE loops and carpets.
//
// Loops sharing a lattice site are clustered with a disjoint-set forest. Each cluster's
// filled region is the set of cells not 4-connected to infinity through unoccupied cells;
// its boundary on the dual grid is the CLE loop. Clusters whose filled region lies inside
// another cluster's filled region are not outermost and are dropped. Nesting repeats the
// construction with a fresh soup inside each loop.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cle/grid.hpp"
#include "cle/loop_soup.hpp"

namespace cle {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct LoopCluster {
  std::vector<std::size_t> members;  // loop indices, ascending
  std::vector<Cell> sites;           // occupied sites (global), row-major, distinct
};

/// Groups loops into maximal clusters of loops linked by shared sites. Clusters are
/// ordered by their smallest member index.
inline std::vector<LoopCluster> cluster_loops(const LoopSoupSample& sample) {
  const LatticeDomain& dom = sample.domain;
  const std::size_t n = sample.loops.size();
  DisjointSets sets(n);
  Grid<std::int64_t> owner(dom.width(), dom.height(), -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (Cell s : sample.loops[i].sites()) {
      const Cell local = s - dom.origin();
      std::int64_t& o = owner[local];
      if (o < 0)
        o = static_cast<std::int64_t>(i);
      else
        sets.unite(static_cast<std::size_t>(o), i);
    }
  }
  std::vector<std::int64_t> slot(n, -1);
  std::vector<LoopCluster> clusters;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = sets.find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::int64_t>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[r])].members.push_back(i);
  }
  for (std::size_t i = 0; i < owner.size(); ++i) {
    const std::int64_t o = owner.at_index(i);
    if (o < 0) continue;
    const auto r = sets.find(static_cast<std::size_t>(o));
    clusters[static_cast<std::size_t>(slot[r])].sites.push_back(owner.cell(i) + dom.origin());
  }
  return clusters;
}

/// A set of cells stored as a bounding box plus a bitmap, in global coordinates.
struct Region {
  Cell origin{0, 0};
  CellMask mask;

  bool contains(Cell global) const noexcept { return mask.get_or(global - origin, 0) != 0; }
  std::size_t count() const { return count_cells(mask); }
  std::vector<Cell> cells() const {
    std::vector<Cell> out = mask_cells(mask);
    for (Cell& c : out) c = c + origin;
    return out;
  }
  bool operator==(const Region&) const = default;
};

/// Corner of the dual grid: vertex (x, y) is the lower-left corner of cell (x, y).
using Vertex = Cell;

/// Cells of `sites` plus every cell they enclose (not 4-connected to infinity through
/// unoccupied cells).
inline Region fill_region(std::span<const Cell> sites) {
  if (sites.empty()) throw std::invalid_argument("fill_region: empty site set");
  int x0 = sites[0].x, x1 = sites[0].x, y0 = sites[0].y, y1 = sites[0].y;
  for (Cell s : sites) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  // Padded by one cell so the exterior is connected around the box.
  const int w = x1 - x0 + 3, h = y1 - y0 + 3;
  CellMask occ(w, h, 0);
  for (Cell s : sites) occ(s.x - x0 + 1, s.y - y0 + 1) = 1;
  CellMask outside(w, h, 0);
  std::vector<std::size_t> stack{0};
  outside.at_index(0) = 1;
  while (!stack.empty()) {
    const Cell c = occ.cell(stack.back());
    stack.pop_back();
    for (Cell s : kSteps) {
      const Cell n = c + s;
      if (!occ.contains(n) || occ[n] || outside[n]) continue;
      outside[n] = 1;
      stack.push_back(occ.index(n));
    }
  }
  Region r{{x0, y0}, CellMask(w - 2, h - 2, 0)};
  for (int y = 0; y < h - 2; ++y)
    for (int x = 0; x < w - 2; ++x) r.mask(x, y) = outside(x + 1, y + 1) ? 0 : 1;
  return r;
}

/// Outer boundary of a filled region as a closed polygon of dual-grid vertices,
/// counter-clockwise with unit edges, starting at the lowest-then-leftmost vertex.
/// Throws if the boundary is not a single simple curve.
inline std::vector<Vertex> trace_boundary(const Region& region) {
  const CellMask& m = region.mask;
  const int vw = m.width() + 1, vh = m.height() + 1;
  // Outgoing edge direction per vertex; 4 = none.
  Grid<std::uint8_t> out(vw, vh, 4);
  std::size_t edges = 0;
  auto add = [&](int x, int y, Dir d) {
    std::uint8_t& slot = out(x, y);
    if (slot != 4) throw std::logic_error("trace_boundary: boundary is not a simple curve");
    slot = static_cast<std::uint8_t>(d);
    ++edges;
  };
  auto inside = [&](int x, int y) { return m.contains(x, y) && m(x, y) != 0; };
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      if (!inside(x, y - 1)) add(x, y, Dir::East);
      if (!inside(x + 1, y)) add(x + 1, y, Dir::North);
      if (!inside(x, y + 1)) add(x + 1, y + 1, Dir::West);
      if (!inside(x - 1, y)) add(x, y + 1, Dir::South);
    }
  if (edges == 0) throw std::invalid_argument("trace_boundary: empty region");
  Vertex start{0, 0};
  bool found = false;
  for (int y = 0; y < vh && !found; ++y)
    for (int x = 0; x < vw && !found; ++x)
      if (out(x, y) != 4) {
        start = {x, y};
        found = true;
      }
  std::vector<Vertex> poly;
  poly.reserve(edges);
  Vertex v = start;
  do {
    poly.push_back(v + region.origin);
    const std::uint8_t d = out[v];
    if (d == 4) throw std::logic_error("trace_boundary: open boundary");
    v = v + step(static_cast<Dir>(d));
  } while (v != start && poly.size() <= edges);
  if (poly.size() != edges) throw std::logic_error("trace_boundary: boundary has several components");
  return poly;
}

inline constexpr int kNoParent = -1;

struct CleLoop {
  int id = 0;
  int depth = 0;
  int parity = 0;
  int parent = kNoParent;
  std::vector<Vertex> boundary;  // closed dual-grid polygon, counter-clockwise
  Region interior;               // cells enclosed by the boundary, boundary cells included

  bool operator==(const CleLoop&) const = default;
};

struct ExtractionStats {
  std::size_t clusters = 0;
  std::size_t boundary_discarded = 0;  // touched the edge of the allowed set
  std::size_t nested_discarded = 0;    // inside another cluster's filled region
  bool operator==(const ExtractionStats&) const = default;
};

struct LayerExtraction {
  std::vector<CleLoop> loops;
  ExtractionStats stats;
};

namespace detail {

struct FilledCandidate {
  Region fill;
  Cell probe;           // any occupied site
  bool touches_edge;    // adjacent to a cell outside the allowed set
  std::size_t area;
  std::size_t order;
};

/// Keeps the outermost candidates. Filled regions are nested or disjoint, so processing by
/// decreasing area and testing one site against already-painted fills is exact. Edge-touching
/// candidates still shadow what they enclose but are not emitted.
inline std::vector<std::size_t> outermost(std::vector<FilledCandidate>& cands, const LatticeDomain& dom,
                                          ExtractionStats& stats) {
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cands[a].area != cands[b].area) return cands[a].area > cands[b].area;
    return cands[a].order < cands[b].order;
  });
  CellMask painted(dom.width(), dom.height(), 0);
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const FilledCandidate& c = cands[idx];
    if (painted.get_or(c.probe - dom.origin(), 0)) {
      ++stats.nested_discarded;
      continue;
    }
    const CellMask& m = c.fill.mask;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (!m(x, y)) continue;
        const Cell g = Cell{x, y} + c.fill.origin - dom.origin();
        if (painted.contains(g)) painted[g] = 1;
      }
    if (c.touches_edge) {
      ++stats.boundary_discarded;
      continue;
    }
    kept.push_back(idx);
  }
  return kept;
}

inline bool touches_edge(const LatticeDomain& dom, std::span<const Cell> sites) {
  for (Cell s : sites)
    for (Cell d : kSteps)
      if (!dom.allows(s + d)) return true;
  return false;
}

}  // namespace detail

/// Outer boundaries of the outermost clusters. Returned loops have depth 0, ids 0..n-1 in
/// decreasing interior size, and pairwise disjoint interiors.
inline LayerExtraction extract_cle_loops(const std::vector<LoopCluster>& clusters, const LatticeDomain& domain) {
  LayerExtraction out;
  out.stats.clusters = clusters.size();
  std::vector<detail::FilledCandidate> cands;
  cands.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const LoopCluster& cl = clusters[i];
    if (cl.sites.empty()) continue;
    Region fill = fill_region(cl.sites);
    const std::size_t area = fill.count();
    cands.push_back({std::move(fill), cl.sites.front(), detail::touches_edge(domain, cl.sites), area, i});
  }
  for (std::size_t idx : detail::outermost(cands, domain, out.stats)) {
    CleLoop loop;
    loop.id = static_cast<int>(out.loops.size());
    loop.boundary = trace_boundary(cands[idx].fill);
    loop.interior = std::move(cands[idx].fill);
    out.loops.push_back(std::move(loop));
  }
  return out;
}

/// Re-applies the outermost filter to a set of loops (interiors as filled regions).
inline std::vector<CleLoop> outermost_filter(const std::vector<CleLoop>& loops, const LatticeDomain& domain) {
  std::vector<detail::FilledCandidate> cands;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const std::vector<Cell> cells = loops[i].interior.cells();
    cands.push_back({loops[i].interior, cells.front(), false, cells.size(), i});
  }
  ExtractionStats stats;
  std::vector<std::size_t> kept = detail::outermost(cands, domain, stats);
  std::sort(kept.begin(), kept.end());
  std::vector<CleLoop> out;
  for (std::size_t i : kept) out.push_back(loops[i]);
  return out;
}

struct EnsembleStats {
  std::vector<ExtractionStats> per_depth;
  std::size_t soups = 0;
  std::size_t soup_loops = 0;
  bool operator==(const EnsembleStats&) const = default;
};

/// Nested CLE loops in a lattice domain. Loops are stored parent-before-child; loops[i].id == i.
struct NestedEnsemble {
  KappaParams params;
  LatticeDomain domain;
  std::uint64_t seed = 0;
  int depth_limit = 0;
  int lmax = 0;
  std::vector<CleLoop> loops;
  EnsembleStats stats;

  std::vector<int> children(int id) const {
    std::vector<int> out;
    for (const CleLoop& l : loops)
      if (l.parent == id) out.push_back(l.id);
    return out;
  }

  bool operator==(const NestedEnsemble&) const = default;
};

/// Minimum interior extent (cells per side) below which no inner soup is sampled.
inline constexpr int kMinNestingExtent = 4;

/// Allowed set for the soup inside a loop: its interior minus the cells adjacent to the
/// exterior, cropped to its bounding box. Empty when below the nesting resolution.
inline std::optional<LatticeDomain> inner_domain(const CleLoop& loop, double delta) {
  const CellMask& m = loop.interior.mask;
  CellMask core(m.width(), m.height(), 0);
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      bool edge = false;
      for (Cell d : kSteps)
        if (!m.get_or(Cell{x, y} + d, 0)) edge = true;
      if (edge) continue;
      core(x, y) = 1;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (x1 < 0) return std::nullopt;
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  if (w < kMinNestingExtent || h < kMinNestingExtent) return std::nullopt;
  CellMask cropped(w, h, 0);
  std::size_t n = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      cropped(x, y) = core(x + x0, y + y0);
      n += cropped(x, y);
    }
  if (n < static_cast<std::size_t>(kMinNestingExtent * kMinNestingExtent)) return std::nullopt;
  return LatticeDomain(delta, std::move(cropped), loop.interior.origin + Cell{x0, y0});
}

/// Length cap for an inner soup: loops much longer than the domain area essentially never
/// stay inside it.
inline int inner_lmax(int lmax, const LatticeDomain& d) {
  const long long cap = 4LL * d.width() * d.height();
  const long long even = std::max<long long>(4, cap + (cap % 2));
  return static_cast<int>(std::min<long long>(lmax, even));
}

namespace detail {

inline LayerExtraction sample_layer(const KappaParams& params, const LatticeDomain& dom, int lmax,
                                    std::uint64_t seed, EnsembleStats& stats) {
  LoopSoupSample soup = sample_loop_soup(params, dom, lmax, seed);
  ++stats.soups;
  stats.soup_loops += soup.loops.size();
  return extract_cle_loops(cluster_loops(soup), dom);
}

inline void add_stats(ExtractionStats& acc, const ExtractionStats& s) {
  acc.clusters += s.clusters;
  acc.boundary_discarded += s.boundary_discarded;
  acc.nested_discarded += s.nested_discarded;
}

}  // namespace detail

/// Seed of the soup sampled inside loop `parent_id` (or the top level when parent_id < 0).
inline std::uint64_t layer_seed(std::uint64_t seed, int parent_id) {
  return parent_id < 0 ? derive_seed(seed, 0x70D0) : derive_seed(derive_seed(seed, 0x1E57), static_cast<std::uint64_t>(parent_id));
}

/// Nested ensemble down to depth_limit. Parities follow coin 0 (parity = depth mod 2).
inline NestedEnsemble nest_ensemble(const KappaParams& params, const LatticeDomain& domain, int depth_limit,
                                    int lmax, std::uint64_t seed) {
  if (depth_limit < 0) throw std::invalid_argument("depth_limit must be >= 0");
  NestedEnsemble ens{params, domain, seed, depth_limit, lmax, {}, {}};
  ens.stats.per_depth.resize(static_cast<std::size_t>(depth_limit) + 1);

  LayerExtraction top = detail::sample_layer(params, domain, lmax, layer_seed(seed, -1), ens.stats);
  ens.stats.per_depth[0] = top.stats;
  for (CleLoop& l : top.loops) ens.loops.push_back(std::move(l));

  std::size_t layer_begin = 0;
  for (int depth = 1; depth <= depth_limit; ++depth) {
    const std::size_t layer_end = ens.loops.size();
    for (std::size_t p = layer_begin; p < layer_end; ++p) {
      const auto inner = inner_domain(ens.loops[p], domain.delta());
      if (!inner) continue;
      const int parent_id = ens.loops[p].id;
      LayerExtraction layer = detail::sample_layer(params, *inner, inner_lmax(lmax, *inner),
                                                   layer_seed(seed, parent_id), ens.stats);
      detail::add_stats(ens.stats.per_depth[static_cast<std::size_t>(depth)], layer.stats);
      for (CleLoop& l : layer.loops) {
        l.id = static_cast<int>(ens.loops.size());
        l.depth = depth;
        l.parent = parent_id;
        l.parity = depth % 2;
        ens.loops.push_back(std::move(l));
      }
    }
    layer_begin = layer_end;
  }
  return ens;
}

/// Roots get parity `coin`; every child gets the opposite parity of its parent.
inline NestedEnsemble mark_parity(NestedEnsemble ens, int coin) {
  if (coin != 0 && coin != 1) throw std::invalid_argument("coin must be 0 or 1");
  for (CleLoop& l : ens.loops) {
    if (l.parent == kNoParent)
      l.parity = coin;
    else
      l.parity = 1 - ens.loops[static_cast<std::size_t>(l.parent)].parity;
  }
  return ens;
}

/// True when parities alternate along every parent/child pair and ids are consistent.
inline bool parity_alternates(const NestedEnsemble& ens) {
  for (std::size_t i = 0; i < ens.loops.size(); ++i) {
    const CleLoop& l = ens.loops[i];
    if (l.id != static_cast<int>(i)) return false;
    if (l.parity != 0 && l.parity != 1) return false;
    if (l.parent == kNoParent) continue;
    if (l.parent < 0 || l.parent >= l.id) return false;
    if (ens.loops[static_cast<std::size_t>(l.parent)].parity == l.parity) return false;
  }
  return true;
}

struct CarpetMask {
  static constexpr std::int32_t kOuterCarpet = -1;
  static constexpr std::int32_t kOutsideDomain = -2;

  Cell origin{0, 0};          // global coordinate of label(0, 0)
  double delta = 1.0;
  Grid<std::int32_t> label;   // innermost enclosing loop id, or one of the markers above
  CellMask upsilon;           // union of carpet pieces of parity-0 loops
  Grid<std::int32_t> component;  // component id within upsilon, -1 elsewhere
  std::vector<std::vector<Cell>> components;  // local cells per component, row-major

  int width() const noexcept { return label.width(); }
  int height() const noexcept { return label.height(); }

  /// Cells carrying a given label, as a mask over the grid.
  CellMask piece(std::int32_t id) const {
    CellMask m(width(), height(), 0);
    for (std::size_t i = 0; i < label.size(); ++i) m.at_index(i) = label.at_index(i) == id ? 1 : 0;
    return m;
  }
  CellMask outer_carpet() const { return piece(kOuterCarpet); }
};

/// Labels every cell with its carpet piece and assembles upsilon and its components.
/// Cells are in the ensemble domain's local coordinates.
inline CarpetMask build_carpet_mask(const NestedEnsemble& ens) {
  const LatticeDomain& dom = ens.domain;
  CarpetMask cm;
  cm.origin = dom.origin();
  cm.delta = dom.delta();
  cm.label = Grid<std::int32_t>(dom.width(), dom.height(), CarpetMask::kOuterCarpet);
  for (std::size_t i = 0; i < cm.label.size(); ++i)
    if (!dom.allowed().at_index(i)) cm.label.at_index(i) = CarpetMask::kOutsideDomain;
  // Parents precede children, so later writes are the innermost loop.
  for (const CleLoop& l : ens.loops) {
    const CellMask& m = l.interior.mask;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (!m(x, y)) continue;
        const Cell g = Cell{x, y} + l.interior.origin - dom.origin();
        if (cm.label.contains(g)) cm.label[g] = l.id;
      }
  }
  cm.upsilon = CellMask(dom.width(), dom.height(), 0);
  for (std::size_t i = 0; i < cm.label.size(); ++i) {
    const std::int32_t id = cm.label.at_index(i);
    cm.upsilon.at_index(i) = (id >= 0 && ens.loops[static_cast<std::size_t>(id)].parity == 0) ? 1 : 0;
  }
  const int n = label_components(cm.upsilon, cm.component);
  cm.components.assign(static_cast<std::size_t>(n), {});
  for (std::size_t i = 0; i < cm.component.size(); ++i) {
    const std::int32_t c = cm.component.at_index(i);
    if (c >= 0) cm.components[static_cast<std::size_t>(c)].push_back(cm.component.cell(i));
  }
  return cm;
}

/// Whether x and y (local cells) are joined by a 4-connected path of upsilon cells inside
/// `window`. Throws std::invalid_argument when x or y is not in upsilon within the window.
inline bool connected(const CarpetMask& mask, const CellRect& window, Cell x, Cell y) {
  auto valid = [&](Cell c) { return window.contains(c) && mask.upsilon.contains(c) && mask.upsilon[c]; };
  if (!valid(x) || !valid(y)) throw std::invalid_argument("connected: endpoints must lie in upsilon within the window");
  if (x == y) return true;
  CellMask seen(mask.width(), mask.height(), 0);
  std::vector<Cell> stack{x};
  seen[x] = 1;
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (Cell d : kSteps) {
      const Cell n = c + d;
      if (!valid(n) || seen[n]) continue;
      if (n == y) return true;
      seen[n] = 1;
      stack.push_back(n);
    }
  }
  return false;
}

}  // namespace cle
