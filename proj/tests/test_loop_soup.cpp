#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "cle/loop_soup.hpp"

namespace {

using namespace cle;

// Closed walks of length n from root that stay in the allowed set, by exhaustive enumeration.
std::uint64_t count_closed_walks(const LatticeDomain& dom, Cell root, int n) {
  std::uint64_t total = 0;
  const std::uint64_t walks = 1ULL << (2 * n);
  for (std::uint64_t w = 0; w < walks; ++w) {
    Cell c = root;
    bool ok = true;
    for (int t = 0; t < n && ok; ++t) {
      c = c + step(static_cast<Dir>((w >> (2 * t)) & 3));
      ok = dom.allows(c);
    }
    if (ok && c == root) ++total;
  }
  return total;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

TEST(FreeMass, MatchesBinomialFormula) {
  for (int n = 2; n <= 40; n += 2) {
    const double closed = binomial(n, n / 2) * binomial(n, n / 2);
    EXPECT_NEAR(free_loop_mass(n), closed / std::pow(4.0, n) / n, 1e-15) << n;
  }
  EXPECT_EQ(free_loop_mass(3), 0.0);
  EXPECT_EQ(free_loop_mass(0), 0.0);
}

TEST(FreeMass, CumulativeIsRunningSum) {
  const auto cum = free_mass_cumulative(20);
  double acc = 0.0;
  for (int n = 2; n <= 20; n += 2) {
    acc += free_loop_mass(n);
    EXPECT_NEAR(cum[static_cast<std::size_t>(n / 2 - 1)], acc, 1e-15);
  }
}

TEST(FreeMass, TailBelowTruncationBound) {
  for (int lmax : {4, 16, 64, 256}) {
    // Running product of the return probability C(n, n/2)^2 / 4^n.
    double ret = free_loop_mass(lmax + 2) * (lmax + 2), tail = 0.0;
    for (int n = lmax + 2; n <= 2000000; n += 2) {
      if (n > lmax + 2) ret *= (static_cast<double>(n - 1) / n) * (static_cast<double>(n - 1) / n);
      tail += ret / n;
    }
    tail += 1.0 / (std::numbers::pi * 2000000);  // asymptotic remainder beyond the sum
    EXPECT_LE(tail, truncated_mass_bound(lmax)) << lmax;
    EXPECT_GT(tail, 0.5 * truncated_mass_bound(lmax)) << lmax;
  }
}

TEST(MassTable, RejectsBadLength) {
  const auto dom = LatticeDomain::rectangle(3, 3, 1.0);
  EXPECT_THROW(loop_measure_table(dom, 5), std::invalid_argument);
  EXPECT_THROW(loop_measure_table(dom, 2), std::invalid_argument);
}

TEST(MassTable, SingleCellHasNoLoops) {
  const auto t = loop_measure_table(LatticeDomain::rectangle(1, 1, 1.0), 8);
  EXPECT_EQ(t.total(), 0.0);
}

TEST(MassTable, TwoByTwoClosedForm) {
  // Per root: two back-and-forth 2-walks, and trace(A^4)/4 = 8 closed 4-walks on the 4-cycle.
  const auto t = loop_measure_table(LatticeDomain::rectangle(2, 2, 1.0), 4);
  ASSERT_EQ(t.roots().size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_DOUBLE_EQ(t.mass(r, 2), 2.0 / 16.0 / 2.0);
    EXPECT_DOUBLE_EQ(t.mass(r, 4), 8.0 / 256.0 / 4.0);
  }
  EXPECT_DOUBLE_EQ(t.total(), 9.0 / 32.0);
}

TEST(MassTable, MatchesWalkEnumeration) {
  CellMask l(4, 3, 1);
  l(3, 2) = 0;
  l(2, 2) = 0;
  const LatticeDomain doms[] = {LatticeDomain::rectangle(3, 3, 1.0), LatticeDomain(1.0, l, {5, -2})};
  for (const LatticeDomain& dom : doms) {
    const auto t = loop_measure_table(dom, 8);
    for (std::size_t r = 0; r < t.roots().size(); ++r)
      for (int n = 2; n <= 8; n += 2) {
        const double expect = static_cast<double>(count_closed_walks(dom, t.roots()[r], n)) / std::pow(4.0, n) / n;
        EXPECT_NEAR(t.mass(r, n), expect, 1e-15);
      }
  }
}

TEST(MassTable, InteriorRootSeesFreeMass) {
  const auto t = loop_measure_table(LatticeDomain::rectangle(9, 9, 1.0), 8);
  std::size_t centre = 0;
  while (t.roots()[centre] != Cell{4, 4}) ++centre;
  for (int n = 2; n <= 8; n += 2) EXPECT_NEAR(t.mass(centre, n), free_loop_mass(n), 1e-15);
}

TEST(MassTable, MonotoneInLengthAndDomain) {
  const auto small = LatticeDomain::rectangle(4, 4, 1.0);
  CellMask big_mask(6, 6, 1);
  const LatticeDomain big(1.0, big_mask, {-1, -1});
  double prev = 0.0;
  for (int lmax = 4; lmax <= 16; lmax += 2) {
    const auto ts = loop_measure_table(small, lmax);
    const auto tb = loop_measure_table(big, lmax);
    EXPECT_GE(ts.total(), prev);
    prev = ts.total();
    for (std::size_t r = 0; r < ts.roots().size(); ++r) {
      std::size_t rb = 0;
      while (tb.roots()[rb] != ts.roots()[r]) ++rb;
      EXPECT_LE(ts.root_total(r), tb.root_total(rb) + 1e-15);
    }
  }
}

TEST(ProposeLoop, ClosedWalkShapesAreUniform) {
  // Length-4 proposals must be uniform over the C(4,2)^2 = 36 closed 4-walks.
  const auto dom = LatticeDomain::rectangle(21, 21, 1.0);
  const std::vector<Cell> root{{10, 10}};
  const auto cum = free_mass_cumulative(4);
  std::map<std::vector<Dir>, int> counts;
  int n4 = 0;
  for (std::uint64_t i = 0; n4 < 36000; ++i) {
    CounterRng rng(derive_seed(17, i));
    const auto loop = propose_loop(dom, root, cum, rng);
    ASSERT_TRUE(loop.has_value());
    ASSERT_TRUE(loop->closed());
    if (loop->length() != 4) continue;
    ++counts[loop->steps];
    ++n4;
  }
  ASSERT_EQ(counts.size(), 36u);
  double chi2 = 0.0;
  for (const auto& [shape, k] : counts) chi2 += (k - 1000.0) * (k - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 66.6);  // 0.999 quantile, 35 degrees of freedom
}

TEST(LoopSoup, DeterministicAndInside) {
  const KappaParams p = KappaParams::from_kappa(3.0);
  const auto dom = LatticeDomain::rectangle(16, 12, 1.0 / 16);
  const auto a = sample_loop_soup(p, dom, 64, 5);
  const auto b = sample_loop_soup(p, dom, 64, 5);
  const auto c = sample_loop_soup(p, dom, 64, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.loops, c.loops);
  EXPECT_GT(a.loops.size(), 0u);
  for (const LatticeLoop& l : a.loops) {
    EXPECT_TRUE(l.closed());
    EXPECT_LE(l.length(), 64u);
    for (Cell s : l.sites()) EXPECT_TRUE(dom.allows(s));
  }
}

TEST(LoopSoup, PerLoopIntensityMatchesTable) {
  // Counts per (root, length) are Poisson with mean c * mass; check each within 4 SE.
  const KappaParams p = KappaParams::from_kappa(3.5);
  const auto dom = LatticeDomain::rectangle(3, 2, 1.0);
  const int lmax = 6;
  const auto t = loop_measure_table(dom, lmax);
  const std::size_t reps = 20000;
  std::map<std::pair<Cell, std::size_t>, double> counts;
  double total = 0.0;
  for (std::size_t i = 0; i < reps; ++i)
    for (const LatticeLoop& l : sample_loop_soup(p, dom, lmax, derive_seed(2024, i)).loops) {
      counts[{l.root, l.length()}] += 1.0;
      total += 1.0;
    }
  for (std::size_t r = 0; r < t.roots().size(); ++r)
    for (int n = 2; n <= lmax; n += 2) {
      const double mu = p.c * t.mass(r, n) * reps;
      const double got = counts[{t.roots()[r], static_cast<std::size_t>(n)}];
      EXPECT_NEAR(got, mu, 4.0 * std::sqrt(mu) + 1e-9) << "root " << r << " length " << n;
    }
  const double mu_total = p.c * t.total() * reps;
  EXPECT_NEAR(total, mu_total, 3.0 * std::sqrt(mu_total));
}

}  // namespace
