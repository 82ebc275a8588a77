#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "cle/carpet.hpp"
#include "cle/checks.hpp"
#include "cle/estimators.hpp"

namespace {

using namespace cle;

const KappaParams kParams = KappaParams::from_kappa(3.0);

long long twice_signed_area(const std::vector<Vertex>& poly) {
  long long a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vertex p = poly[i], q = poly[(i + 1) % poly.size()];
    a += static_cast<long long>(p.x) * q.y - static_cast<long long>(q.x) * p.y;
  }
  return a;
}

// Enclosed cells are complement components of the padded box that miss its border.
std::set<Cell> fill_oracle(const std::vector<Cell>& sites) {
  int x0 = sites[0].x, y0 = sites[0].y, x1 = x0, y1 = y0;
  for (Cell s : sites) {
    x0 = std::min(x0, s.x);
    y0 = std::min(y0, s.y);
    x1 = std::max(x1, s.x);
    y1 = std::max(y1, s.y);
  }
  const Cell off{x0 - 1, y0 - 1};
  CellMask comp(x1 - x0 + 3, y1 - y0 + 3, 1);
  for (Cell s : sites) comp[s - off] = 0;
  Grid<std::int32_t> labels;
  const int n = label_components(comp, labels);
  std::vector<bool> open(static_cast<std::size_t>(n), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Cell c = labels.cell(i);
    if (labels.at_index(i) >= 0 && (c.x == 0 || c.y == 0 || c.x == comp.width() - 1 || c.y == comp.height() - 1))
      open[static_cast<std::size_t>(labels.at_index(i))] = true;
  }
  std::set<Cell> out(sites.begin(), sites.end());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels.at_index(i) >= 0 && !open[static_cast<std::size_t>(labels.at_index(i))]) out.insert(labels.cell(i) + off);
  return out;
}

CleLoop square_loop(int x0, int y0, int side) {
  std::vector<Cell> cells;
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) cells.push_back({x, y});
  CleLoop l;
  l.interior = fill_region(cells);
  l.boundary = trace_boundary(l.interior);
  return l;
}

TEST(DisjointSets, UnionFind) {
  DisjointSets s(6);
  EXPECT_TRUE(s.unite(0, 1));
  EXPECT_TRUE(s.unite(2, 3));
  EXPECT_FALSE(s.unite(1, 0));
  EXPECT_TRUE(s.unite(1, 3));
  EXPECT_EQ(s.find(0), s.find(2));
  EXPECT_NE(s.find(0), s.find(4));
}

TEST(Clusters, MatchPairwiseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto soup = sample_loop_soup(kParams, LatticeDomain::rectangle(24, 24, 1.0 / 24), 576, seed);
    const std::size_t n = soup.loops.size();
    std::vector<std::set<Cell>> sites(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = soup.loops[i].sites();
      sites[i] = std::set<Cell>(s.begin(), s.end());
    }
    std::vector<std::size_t> label(n);
    for (std::size_t i = 0; i < n; ++i) label[i] = i;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          if (label[i] == label[j]) continue;
          const bool share = std::any_of(sites[i].begin(), sites[i].end(), [&](Cell c) { return sites[j].count(c) > 0; });
          if (!share) continue;
          const std::size_t lo = std::min(label[i], label[j]), hi = std::max(label[i], label[j]);
          for (auto& l : label)
            if (l == hi) l = lo;
          changed = true;
        }
    }
    const auto clusters = cluster_loops(soup);
    std::set<std::size_t> distinct(label.begin(), label.end());
    ASSERT_EQ(clusters.size(), distinct.size()) << "seed " << seed;
    for (const LoopCluster& c : clusters) {
      std::set<Cell> expect_sites;
      for (std::size_t m : c.members) {
        EXPECT_EQ(label[m], label[c.members.front()]);
        expect_sites.insert(sites[m].begin(), sites[m].end());
      }
      EXPECT_EQ(std::count(label.begin(), label.end(), label[c.members.front()]),
                static_cast<std::ptrdiff_t>(c.members.size()));
      EXPECT_TRUE(std::is_sorted(c.members.begin(), c.members.end()));
      EXPECT_EQ(std::set<Cell>(c.sites.begin(), c.sites.end()), expect_sites);
      EXPECT_EQ(c.sites.size(), expect_sites.size());
    }
  }
}

TEST(FillRegion, MatchesComplementOracle) {
  const auto corpus = random_connected_corpus(300, 60, 77);
  for (const auto& cells : corpus) {
    const Region r = fill_region(cells);
    const auto expect = fill_oracle(cells);
    const auto got = r.cells();
    EXPECT_EQ(std::set<Cell>(got.begin(), got.end()), expect);
  }
}

TEST(FillRegion, RingEnclosesCentre) {
  std::vector<Cell> ring;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      if (x != 1 || y != 1) ring.push_back({x + 10, y - 4});
  const Region r = fill_region(ring);
  EXPECT_EQ(r.count(), 9u);
  EXPECT_TRUE(r.contains({11, -3}));
  EXPECT_FALSE(r.contains({13, -3}));
}

TEST(TraceBoundary, SingleCell) {
  const std::vector<Cell> one{{2, 3}};
  EXPECT_EQ(trace_boundary(fill_region(one)), (std::vector<Vertex>{{2, 3}, {3, 3}, {3, 4}, {2, 4}}));
}

TEST(TraceBoundary, SimpleCounterClockwiseUnitPolygon) {
  const auto corpus = random_connected_corpus(300, 80, 5);
  for (const auto& cells : corpus) {
    const Region r = fill_region(cells);
    const auto poly = trace_boundary(r);
    EXPECT_EQ(twice_signed_area(poly), 2 * static_cast<long long>(r.count()));
    EXPECT_EQ(std::set<Vertex>(poly.begin(), poly.end()).size(), poly.size());
    const Vertex lowest = *std::min_element(poly.begin(), poly.end(),
                                            [](Vertex a, Vertex b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    EXPECT_EQ(poly.front(), lowest);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Cell d = poly[(i + 1) % poly.size()] - poly[i];
      EXPECT_EQ(std::abs(d.x) + std::abs(d.y), 1);
    }
  }
}

TEST(TraceBoundary, RejectsEmpty) {
  const Region empty{{0, 0}, CellMask(2, 2, 0)};
  EXPECT_THROW(trace_boundary(empty), std::invalid_argument);
  EXPECT_THROW(fill_region(std::vector<Cell>{}), std::invalid_argument);
}

TEST(OutermostFilter, DropsNestedLoops) {
  const LatticeDomain dom = LatticeDomain::rectangle(16, 16, 1.0 / 16);
  const std::vector<CleLoop> loops{square_loop(6, 6, 2), square_loop(2, 2, 8), square_loop(12, 12, 2),
                                   square_loop(3, 3, 1)};
  const auto kept = outermost_filter(loops, dom);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], loops[1]);
  EXPECT_EQ(kept[1], loops[2]);
  EXPECT_EQ(outermost_filter(kept, dom), kept);
}

TEST(Extraction, EdgeClustersShadowButAreNotEmitted) {
  // A cluster hugging the left edge surrounds a smaller cluster; neither is emitted.
  const LatticeDomain dom = LatticeDomain::rectangle(10, 10, 0.1);
  LoopCluster outer, inner;
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 7; ++x)
      if (x == 0 || y == 0 || x == 6 || y == 6) outer.sites.push_back({x, y});
  inner.sites = {{3, 3}, {3, 4}};
  std::sort(outer.sites.begin(), outer.sites.end(), [](Cell a, Cell b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  const auto out = extract_cle_loops({outer, inner}, dom);
  EXPECT_TRUE(out.loops.empty());
  EXPECT_EQ(out.stats.clusters, 2u);
  EXPECT_EQ(out.stats.boundary_discarded, 1u);
  EXPECT_EQ(out.stats.nested_discarded, 1u);
}

TEST(NestedEnsemble, StructuralInvariants) {
  const LatticeDomain dom = LatticeDomain::rectangle(64, 64, 1.0 / 64);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto ens = nest_ensemble(kParams, dom, 2, 4096, seed);
    EXPECT_EQ(ens, nest_ensemble(kParams, dom, 2, 4096, seed));
    EXPECT_TRUE(parity_alternates(ens));
    EXPECT_EQ(ens.stats.per_depth.size(), 3u);
    for (const CleLoop& l : ens.loops) {
      EXPECT_LE(l.depth, 2);
      EXPECT_EQ(l.parity, l.depth % 2);
      EXPECT_EQ(l.boundary, trace_boundary(l.interior));
      if (l.parent == kNoParent) {
        EXPECT_EQ(l.depth, 0);
        continue;
      }
      const CleLoop& p = ens.loops[static_cast<std::size_t>(l.parent)];
      EXPECT_EQ(l.depth, p.depth + 1);
      const auto inner = inner_domain(p, dom.delta());
      ASSERT_TRUE(inner.has_value());
      for (Cell c : l.interior.cells()) EXPECT_TRUE(inner->allows(c));
    }
  }
}

TEST(NestedEnsemble, DepthZeroIsPrefixOfDeeper) {
  const LatticeDomain dom = LatticeDomain::rectangle(48, 48, 1.0 / 48);
  const auto shallow = nest_ensemble(kParams, dom, 0, 2304, 11);
  const auto deep = nest_ensemble(kParams, dom, 2, 2304, 11);
  ASSERT_LE(shallow.loops.size(), deep.loops.size());
  for (std::size_t i = 0; i < shallow.loops.size(); ++i) EXPECT_EQ(shallow.loops[i], deep.loops[i]);
  EXPECT_THROW(nest_ensemble(kParams, dom, -1, 2304, 11), std::invalid_argument);
}

TEST(Parity, CoinSwapsEveryParity) {
  const auto ens = nest_ensemble(kParams, LatticeDomain::rectangle(64, 64, 1.0 / 64), 2, 4096, 3);
  const auto flipped = mark_parity(ens, 1);
  ASSERT_EQ(flipped.loops.size(), ens.loops.size());
  for (std::size_t i = 0; i < ens.loops.size(); ++i) EXPECT_EQ(flipped.loops[i].parity, 1 - ens.loops[i].parity);
  EXPECT_EQ(mark_parity(flipped, 0), ens);
  EXPECT_THROW(mark_parity(ens, 2), std::invalid_argument);

  auto broken = ens;
  for (CleLoop& l : broken.loops)
    if (l.parent != kNoParent) {
      l.parity = broken.loops[static_cast<std::size_t>(l.parent)].parity;
      EXPECT_FALSE(parity_alternates(broken));
      break;
    }
}

TEST(CarpetMask, EmptyEnsembleIsAllOuterCarpet) {
  CellMask allowed(6, 5, 1);
  allowed(0, 0) = 0;
  NestedEnsemble ens;
  ens.domain = LatticeDomain(0.2, allowed, {3, 3});
  const CarpetMask cm = build_carpet_mask(ens);
  EXPECT_EQ(count_cells(cm.outer_carpet()), 29u);
  EXPECT_EQ(cm.label(0, 0), CarpetMask::kOutsideDomain);
  EXPECT_EQ(count_cells(cm.upsilon), 0u);
  EXPECT_TRUE(cm.components.empty());
}

TEST(CarpetMask, LabelsAreInnermostLoop) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const auto ens = nest_ensemble(kParams, LatticeDomain::rectangle(64, 64, 1.0 / 64), 2, 4096, seed);
    const CarpetMask cm = build_carpet_mask(ens);
    EXPECT_EQ(cm.label, detail::brute_labels(ens));
    std::size_t comp_cells = 0;
    for (const auto& comp : cm.components) {
      comp_cells += comp.size();
      EXPECT_TRUE(is_connected(comp));
    }
    EXPECT_EQ(comp_cells, count_cells(cm.upsilon));
  }
}

TEST(CarpetMask, ConnectedMatchesComponents) {
  const auto ens = nest_ensemble(kParams, LatticeDomain::rectangle(64, 64, 1.0 / 64), 2, 4096, 8);
  const CarpetMask cm = build_carpet_mask(ens);
  const auto cells = mask_cells(cm.upsilon);
  ASSERT_GT(cells.size(), 10u);
  const CellRect full{0, 0, cm.width(), cm.height()};
  const CellRect half{0, 0, cm.width() / 2, cm.height()};
  CellMask half_mask = cm.upsilon;
  for (int y = 0; y < half_mask.height(); ++y)
    for (int x = half.x1; x < half_mask.width(); ++x) half_mask(x, y) = 0;
  Grid<std::int32_t> half_labels;
  label_components(half_mask, half_labels);
  CounterRng rng(4);
  for (int q = 0; q < 400; ++q) {
    const Cell a = cells[rng.below(cells.size())], b = cells[rng.below(cells.size())];
    EXPECT_EQ(connected(cm, full, a, b), cm.component[a] == cm.component[b]);
    if (half.contains(a) && half.contains(b)) {
      EXPECT_EQ(connected(cm, half, a, b), half_labels[a] == half_labels[b]);
    }
  }
  EXPECT_THROW(connected(cm, full, Cell{-1, 0}, cells.front()), std::invalid_argument);
}

}  // namespace
