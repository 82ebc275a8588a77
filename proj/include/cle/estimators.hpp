#pragma once

// Estimators built on the carpet and MFPP layers: scaling constants and the distance
// exponent, the sandwich bounds between scales, box-counting dimensions, four-arm
// statistics, the Minkowski area bound and the HausUni distance between function graphs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cle/carpet.hpp"
#include "cle/mfpp.hpp"
#include "cle/parallel.hpp"
#include "cle/stats.hpp"

namespace cle {

// ---------------------------------------------------------------------------
// Scaling constants and the distance exponent

/// Lengths are in lattice units (delta = 1); areas in cell units.
struct ScalingConfig {
  std::vector<double> scales;  // outer annulus radii r; the inner radius is r/2
  double eps = 0.5;
  std::size_t samples = 20;
  int centers = 5;
  double window_factor = 4.0;  // window side = window_factor * r
  bool coupled = false;        // one window and one ensemble per replica for every scale
  int workers = 1;
};

struct ScalingRow {
  double r = 0.0;
  double c_r = 0.0;             // median crossing, +inf when most replicas are blocked
  std::size_t samples = 0;
  double stderr_c = 0.0;        // bootstrap standard deviation of the median
  std::size_t unqualified = 0;  // replicas whose crossing was infinite
  std::vector<double> replica_values;
};

struct ScalingTable {
  double kappa = 0.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::vector<ScalingRow> rows;
  double K_hat = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr std::size_t kBootstrapResamples = 1000;
inline constexpr std::uint64_t kBootstrapStream = 0xB0075A4DULL;

/// Annulus centres around the window centre, offset by multiples of r/4.
inline std::vector<std::array<double, 2>> annulus_centers(double cx, double cy, double r, int count) {
  static constexpr int offsets[9][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  std::vector<std::array<double, 2>> out;
  for (int k = 0; k < std::min(count, 9); ++k) out.push_back({cx + offsets[k][0] * r / 4.0, cy + offsets[k][1] * r / 4.0});
  return out;
}

inline int window_cells(double factor, double r) {
  int w = static_cast<int>(std::ceil(factor * r));
  return w + (w % 2);
}

/// Carpet of the non-nested ensemble on a square window, as a mask.
inline CellMask sample_outer_carpet(const KappaParams& params, int cells, std::uint64_t seed) {
  const LatticeDomain dom = LatticeDomain::rectangle(cells, cells, 1.0);
  const long long a = static_cast<long long>(cells) * cells;
  const int lmax = static_cast<int>(std::max<long long>(4, a + (a % 2)));
  return build_carpet_mask(nest_ensemble(params, dom, 0, lmax, seed)).outer_carpet();
}

namespace detail {

inline double replica_crossing(const CellMask& carpet, const DiscreteDisk& disk, double r, int centers) {
  const double c = carpet.width() / 2.0;
  std::vector<double> vals;
  for (const auto& z : annulus_centers(c, c, r, centers)) {
    const auto v = annulus_crossing(carpet, disk, z[0], z[1], r / 2.0, r);
    vals.push_back(v ? *v : kInf);
  }
  return median(std::move(vals));
}

inline double bootstrap_median_sd(const std::vector<double>& values, std::uint64_t seed) {
  if (values.size() < 2) return 0.0;
  CounterRng rng(seed);
  std::vector<double> meds;
  std::vector<double> res(values.size());
  for (std::size_t b = 0; b < kBootstrapResamples; ++b) {
    for (double& v : res) v = values[rng.below(values.size())];
    const double m = median(res);
    if (std::isfinite(m)) meds.push_back(m);
  }
  return stddev(meds);
}

}  // namespace detail

/// c_r as the median over replicas of the (centre-median) eps-MFPP crossing between the
/// circles of radius r/2 and r in the carpet.
inline ScalingTable scaling_constants(const KappaParams& params, const ScalingConfig& cfg, std::uint64_t seed) {
  if (cfg.scales.empty()) throw std::invalid_argument("scaling_constants: no scales");
  if (cfg.samples == 0) throw std::invalid_argument("scaling_constants: samples must be >= 1");
  for (std::size_t i = 1; i < cfg.scales.size(); ++i)
    if (!(cfg.scales[i] > cfg.scales[i - 1])) throw std::invalid_argument("scaling_constants: scales must increase");
  if (!(cfg.scales.front() >= 2.0)) throw std::invalid_argument("scaling_constants: scales must be at least 2 cells");

  const DiscreteDisk disk(cfg.eps, 1.0);
  ScalingTable table{params.kappa, cfg.eps, seed, {}, std::numeric_limits<double>::quiet_NaN()};
  table.rows.resize(cfg.scales.size());

  if (cfg.coupled) {
    const int cells = window_cells(cfg.window_factor, cfg.scales.back());
    const auto per_replica = parallel_map(cfg.samples, cfg.workers, [&](std::size_t i) {
      const CellMask carpet = sample_outer_carpet(params, cells, derive_seed(seed, i));
      std::vector<double> v;
      for (double r : cfg.scales) v.push_back(detail::replica_crossing(carpet, disk, r, cfg.centers));
      return v;
    });
    for (std::size_t k = 0; k < cfg.scales.size(); ++k)
      for (const auto& v : per_replica) table.rows[k].replica_values.push_back(v[k]);
  } else {
    for (std::size_t k = 0; k < cfg.scales.size(); ++k) {
      const double r = cfg.scales[k];
      const int cells = window_cells(cfg.window_factor, r);
      const std::uint64_t scale_seed = derive_seed(seed, k + 1);
      table.rows[k].replica_values = parallel_map(cfg.samples, cfg.workers, [&](std::size_t i) {
        return detail::replica_crossing(sample_outer_carpet(params, cells, derive_seed(scale_seed, i)), disk, r,
                                        cfg.centers);
      });
    }
  }
  for (std::size_t k = 0; k < cfg.scales.size(); ++k) {
    ScalingRow& row = table.rows[k];
    row.r = cfg.scales[k];
    row.samples = row.replica_values.size();
    row.c_r = median(row.replica_values);
    for (double v : row.replica_values) row.unqualified += std::isfinite(v) ? 0 : 1;
    row.stderr_c = detail::bootstrap_median_sd(row.replica_values, derive_seed(seed ^ kBootstrapStream, k));
  }
  return table;
}

struct ThetaFit {
  double theta_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double r2 = 0.0;
  double max_residual = 0.0;
  std::size_t scales_used = 0;
  double theta_deng = 0.0;
  double dim_carpet = 0.0;
  double theta_upper = 0.0;

  /// Whether 1 < theta_hat and theta_hat < 1 + kappa/8 + slack.
  bool within_bounds(double slack = 0.0) const { return theta_hat > 1.0 && theta_hat < theta_upper + slack; }
};

namespace detail {

inline LineFit loglog_fit(std::span<const double> r, std::span<const double> c) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < r.size(); ++i) {
    x.push_back(std::log(r[i]));
    y.push_back(std::log(c[i]));
  }
  return fit_line(x, y);
}

}  // namespace detail

/// Least-squares slope of log c_r against log r over the finite rows, with a percentile
/// bootstrap interval over replicas.
inline ThetaFit fit_theta(const ScalingTable& table, std::uint64_t bootstrap_seed = kBootstrapStream) {
  std::vector<const ScalingRow*> rows;
  for (const ScalingRow& row : table.rows)
    if (std::isfinite(row.c_r) && row.c_r > 0.0 && row.r > 0.0) rows.push_back(&row);
  if (rows.size() < 3) throw std::invalid_argument("fit_theta: need at least 3 scales with finite estimates");

  std::vector<double> r, c;
  for (const ScalingRow* row : rows) {
    r.push_back(row->r);
    c.push_back(row->c_r);
  }
  const LineFit fit = detail::loglog_fit(r, c);  // throws on zero variance
  ThetaFit out;
  out.theta_hat = fit.slope;
  out.r2 = fit.r2;
  out.scales_used = rows.size();
  for (std::size_t i = 0; i < r.size(); ++i)
    out.max_residual = std::max(out.max_residual, std::abs(std::log(c[i]) - fit.intercept - fit.slope * std::log(r[i])));

  CounterRng rng(bootstrap_seed);
  std::vector<double> slopes;
  std::vector<double> cb(rows.size());
  for (std::size_t b = 0; b < kBootstrapResamples; ++b) {
    bool finite = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& vals = rows[k]->replica_values;
      if (vals.size() < 2) {
        cb[k] = rows[k]->c_r;
        continue;
      }
      std::vector<double> res(vals.size());
      for (double& v : res) v = vals[rng.below(vals.size())];
      cb[k] = median(std::move(res));
      if (!std::isfinite(cb[k]) || cb[k] <= 0.0) finite = false;
    }
    if (finite) slopes.push_back(detail::loglog_fit(r, cb).slope);
  }
  out.ci_low = out.ci_high = out.theta_hat;
  if (!slopes.empty()) {
    out.ci_low = std::min(out.theta_hat, quantile(slopes, 0.025));
    out.ci_high = std::max(out.theta_hat, quantile(slopes, 0.975));
  }
  const KappaParams p = KappaParams::from_kappa(table.kappa);
  out.theta_deng = p.theta_deng;
  out.dim_carpet = p.dim_carpet;
  out.theta_upper = p.theta_upper;
  return out;
}

struct SandwichPair {
  double r_small = 0.0;
  double r_large = 0.0;
  double eps = 0.0;    // r_small / r_large
  double ratio = 0.0;  // c_small / c_large
  bool lower_ok = false;
};

struct SandwichReport {
  std::vector<SandwichPair> pairs;
  bool lower_holds = true;
  double K_hat = 0.0;  // smallest K with ratio <= K * eps on every pair
};

/// Checks eps^2 <= c_{eps r} / c_r on every pair of finite rows and reports the smallest
/// constant of the upper bound c_{eps r} / c_r <= K eps.
inline SandwichReport sandwich_check(const ScalingTable& table) {
  SandwichReport rep;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = i + 1; j < table.rows.size(); ++j) {
      const ScalingRow& a = table.rows[i];
      const ScalingRow& b = table.rows[j];
      if (!std::isfinite(a.c_r) || !std::isfinite(b.c_r) || a.c_r <= 0.0 || b.c_r <= 0.0) continue;
      SandwichPair p;
      p.r_small = a.r;
      p.r_large = b.r;
      p.eps = a.r / b.r;
      p.ratio = a.c_r / b.c_r;
      p.lower_ok = p.ratio >= p.eps * p.eps * (1.0 - 1e-12);
      rep.lower_holds = rep.lower_holds && p.lower_ok;
      rep.K_hat = std::max(rep.K_hat, p.ratio / p.eps);
      rep.pairs.push_back(p);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Box-counting dimension

struct BoxDimension {
  double dimension = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double r2 = 0.0;
  std::size_t octaves_used = 0;
  std::vector<int> box_sizes;          // all octaves, including dropped ones
  std::vector<std::size_t> box_counts;
};

inline constexpr std::size_t kMinBoxOctaves = 4;

/// Box counting over dyadic sizes 1, 2, 4, ... up to the largest size not exceeding the
/// grid's longer side; boxes are anchored at the grid origin. The smallest and largest
/// octaves are dropped before the fit.
inline BoxDimension box_dimension(const CellMask& mask) {
  if (count_cells(mask) == 0) throw std::invalid_argument("box_dimension: empty set");
  const int extent = std::max(mask.width(), mask.height());
  int top = 0;
  while ((1 << (top + 1)) <= extent) ++top;
  BoxDimension out;
  for (int k = 0; k <= top; ++k) {
    const int s = 1 << k;
    const int bw = (mask.width() + s - 1) / s, bh = (mask.height() + s - 1) / s;
    CellMask boxes(bw, bh, 0);
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x)
        if (mask(x, y)) boxes(x / s, y / s) = 1;
    out.box_sizes.push_back(s);
    out.box_counts.push_back(count_cells(boxes));
  }
  if (out.box_sizes.size() < kMinBoxOctaves + 2)
    throw std::domain_error("box_dimension: fewer than 4 usable octaves (grid too small)");
  std::vector<double> x, y;
  for (std::size_t i = 1; i + 1 < out.box_sizes.size(); ++i) {
    x.push_back(-std::log(static_cast<double>(out.box_sizes[i])));
    y.push_back(std::log(static_cast<double>(out.box_counts[i])));
  }
  const LineFit fit = fit_line(x, y);
  out.dimension = fit.slope;
  out.r2 = fit.r2;
  out.octaves_used = x.size();
  const double half = t_quantile_975(x.size() - 2) * fit.slope_stderr;
  out.ci_low = fit.slope - half;
  out.ci_high = fit.slope + half;
  return out;
}

/// Box dimension of a cell set, on the grid spanned by its bounding box.
inline BoxDimension box_dimension(std::span<const Cell> cells) {
  if (cells.empty()) throw std::invalid_argument("box_dimension: empty set");
  int x0 = cells[0].x, y0 = cells[0].y, x1 = x0, y1 = y0;
  for (Cell c : cells) {
    x0 = std::min(x0, c.x);
    y0 = std::min(y0, c.y);
    x1 = std::max(x1, c.x);
    y1 = std::max(y1, c.y);
  }
  CellMask m(x1 - x0 + 1, y1 - y0 + 1, 0);
  for (Cell c : cells) m[c - Cell{x0, y0}] = 1;
  return box_dimension(m);
}

/// Deterministic Sierpinski carpet with 3^generations cells per side.
inline CellMask sierpinski_carpet(int generations) {
  int n = 1;
  for (int g = 0; g < generations; ++g) n *= 3;
  CellMask m(n, n, 0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      bool hole = false;
      for (int a = x, b = y; a > 0 || b > 0; a /= 3, b /= 3)
        if (a % 3 == 1 && b % 3 == 1) hole = true;
      m(x, y) = hole ? 0 : 1;
    }
  return m;
}

inline constexpr std::size_t kMinWitnessCells = 16;

/// Box dimension of the union of geodesic witnesses.
inline BoxDimension geodesic_dimension(std::span<const PathWitness> witnesses) {
  std::vector<Cell> cells;
  for (const PathWitness& w : witnesses) {
    if (w.cells.size() < kMinWitnessCells) throw std::invalid_argument("geodesic_dimension: witness shorter than 16 cells");
    cells.insert(cells.end(), w.cells.begin(), w.cells.end());
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return box_dimension(cells);
}

// ---------------------------------------------------------------------------
// Four-arm statistics

/// Arcs of a closed dual-grid polygon crossing the annulus s <= |z - c| <= t (cell units,
/// vertex coordinates): the number of alternations between the inner disk and the outer
/// complement along the cycle.
inline int count_crossing_arcs(std::span<const Vertex> boundary, double cx, double cy, double s, double t) {
  int first = 0, last = 0, alternations = 0;
  for (Vertex v : boundary) {
    const double d = std::hypot(v.x - cx, v.y - cy);
    const int side = d <= s ? 1 : (d >= t ? 2 : 0);
    if (side == 0) continue;
    if (first == 0)
      first = side;
    else if (side != last)
      ++alternations;
    last = side;
  }
  if (first != 0 && last != first) ++alternations;
  return alternations;
}

/// Crossing arcs of all loops of an ensemble through one annulus.
inline int annulus_arcs(const NestedEnsemble& ens, double cx, double cy, double s, double t) {
  int arcs = 0;
  for (const CleLoop& l : ens.loops) {
    const Region& r = l.interior;
    // Bounding box of the polygon: [origin, origin + dims] in vertex coordinates.
    const double bx0 = r.origin.x, by0 = r.origin.y;
    const double bx1 = bx0 + r.mask.width(), by1 = by0 + r.mask.height();
    const double nx = std::clamp(cx, bx0, bx1), ny = std::clamp(cy, by0, by1);
    if (std::hypot(nx - cx, ny - cy) > s) continue;
    const double fx = std::max(std::abs(cx - bx0), std::abs(cx - bx1));
    const double fy = std::max(std::abs(cy - by0), std::abs(cy - by1));
    if (std::hypot(fx, fy) < t) continue;
    arcs += count_crossing_arcs(l.boundary, cx, cy, s, t);
  }
  return arcs;
}

struct FourArmReport {
  double inner_radius = 0.0;
  std::vector<double> ratios;  // t / s
  std::vector<std::size_t> events;
  std::size_t annuli = 0;
  std::vector<double> frequency;  // P[more than two crossing arcs]
  std::vector<double> excluded_ratios;
  double slope = std::numeric_limits<double>::quiet_NaN();  // fitted against log(s/t)
  double alpha_target = 0.0;

  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < frequency.size(); ++i)
      if (!(frequency[i] < frequency[i - 1])) return false;
    return true;
  }
};

/// Accumulates >2-arm events over ensembles; centres are in vertex coordinates.
class FourArmAccumulator {
 public:
  FourArmAccumulator(double inner_radius, std::vector<double> ratios)
      : s_(inner_radius), ratios_(std::move(ratios)), events_(ratios_.size(), 0) {
    if (!(s_ > 0.0)) throw std::invalid_argument("four_arm: inner radius must be positive");
    for (double q : ratios_)
      if (!(q > 1.0)) throw std::invalid_argument("four_arm: ratios t/s must exceed 1");
  }

  void add(const NestedEnsemble& ens, std::span<const std::array<double, 2>> centers) {
    const double tmax = s_ * *std::max_element(ratios_.begin(), ratios_.end());
    const Cell o = ens.domain.origin();
    for (const auto& z : centers) {
      if (z[0] - tmax < o.x || z[1] - tmax < o.y || z[0] + tmax > o.x + ens.domain.width() ||
          z[1] + tmax > o.y + ens.domain.height())
        throw std::invalid_argument("four_arm: annulus leaves the window");
      ++annuli_;
      for (std::size_t k = 0; k < ratios_.size(); ++k)
        if (annulus_arcs(ens, z[0], z[1], s_, s_ * ratios_[k]) > 2) ++events_[k];
    }
  }

  void merge(const FourArmAccumulator& other) {
    annuli_ += other.annuli_;
    for (std::size_t k = 0; k < events_.size(); ++k) events_[k] += other.events_[k];
  }

  FourArmReport report(double alpha_target) const {
    FourArmReport rep;
    rep.inner_radius = s_;
    rep.ratios = ratios_;
    rep.events = events_;
    rep.annuli = annuli_;
    rep.alpha_target = alpha_target;
    std::vector<double> x, y;
    for (std::size_t k = 0; k < ratios_.size(); ++k) {
      const double f = annuli_ ? static_cast<double>(events_[k]) / static_cast<double>(annuli_) : 0.0;
      rep.frequency.push_back(f);
      if (events_[k] == 0) {
        rep.excluded_ratios.push_back(ratios_[k]);
        continue;
      }
      x.push_back(-std::log(ratios_[k]));
      y.push_back(std::log(f));
    }
    if (x.size() >= 2) rep.slope = fit_line(x, y).slope;
    return rep;
  }

 private:
  double s_;
  std::vector<double> ratios_;
  std::vector<std::size_t> events_;
  std::size_t annuli_ = 0;
};

/// Regular lattice of annulus centres with spacing `step`, keeping every annulus of outer
/// radius t_max inside the domain.
inline std::vector<std::array<double, 2>> arm_centers(const LatticeDomain& dom, double t_max, double step) {
  std::vector<std::array<double, 2>> out;
  const double x0 = dom.origin().x + t_max, x1 = dom.origin().x + dom.width() - t_max;
  const double y0 = dom.origin().y + t_max, y1 = dom.origin().y + dom.height() - t_max;
  for (double y = y0; y <= y1; y += step)
    for (double x = x0; x <= x1; x += step) out.push_back({x, y});
  return out;
}

inline FourArmReport four_arm_stats(std::span<const NestedEnsemble> ensembles,
                                    std::span<const std::array<double, 2>> centers, double inner_radius,
                                    std::vector<double> ratios) {
  FourArmAccumulator acc(inner_radius, std::move(ratios));
  double alpha = 0.0;
  for (const NestedEnsemble& e : ensembles) {
    acc.add(e, centers);
    alpha = e.params.alpha_4a;
  }
  return acc.report(alpha);
}

// ---------------------------------------------------------------------------
// Minkowski area bound

inline bool is_connected(std::span<const Cell> cells) {
  if (cells.empty()) return false;
  std::vector<Cell> sorted(cells.begin(), cells.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto has = [&](Cell c) { return std::binary_search(sorted.begin(), sorted.end(), c); };
  std::vector<Cell> stack{sorted.front()}, seen{sorted.front()};
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (Cell d : kSteps) {
      const Cell n = c + d;
      if (!has(n) || std::find(seen.begin(), seen.end(), n) != seen.end()) continue;
      seen.push_back(n);
      stack.push_back(n);
    }
  }
  return seen.size() == sorted.size();
}

struct MinkowskiInstance {
  std::size_t set = 0;
  double eps = 0.0;
  double ratio = 0.0;  // Leb(B_{eps r}(K)) / (eps Leb(B_r(K)))
};

struct MinkowskiBoundReport {
  std::string corpus;
  double radius = 0.0;  // r, cell units
  std::vector<MinkowskiInstance> instances;
  double k_hat = kInf;
};

inline MinkowskiBoundReport minkowski_lower_bound(const std::vector<std::vector<Cell>>& corpus,
                                                  std::span<const double> eps_list, double radius,
                                                  std::string description = {}) {
  MinkowskiBoundReport rep;
  rep.corpus = std::move(description);
  rep.radius = radius;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!is_connected(corpus[i])) throw std::invalid_argument("minkowski_lower_bound: set " + std::to_string(i) + " is not connected");
    const double big = neighborhood_area(corpus[i], radius, 1.0);
    for (double e : eps_list) {
      if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("minkowski_lower_bound: eps must lie in (0, 1)");
      const double small = neighborhood_area(corpus[i], e * radius, 1.0);
      const double ratio = small / (e * big);
      rep.instances.push_back({i, e, ratio});
      rep.k_hat = std::min(rep.k_hat, ratio);
    }
  }
  return rep;
}

/// Random lattice animals (sizes 1..max_size) grown by uniform boundary accretion.
inline std::vector<std::vector<Cell>> random_connected_corpus(std::size_t count, std::size_t max_size, std::uint64_t seed) {
  std::vector<std::vector<Cell>> out;
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(derive_seed(seed, i));
    const std::size_t size = 1 + rng.below(max_size);
    std::vector<Cell> cells{{0, 0}};
    while (cells.size() < size) {
      const Cell base = cells[rng.below(cells.size())];
      const Cell n = base + kSteps[rng.below(4)];
      if (std::find(cells.begin(), cells.end(), n) == cells.end()) cells.push_back(n);
    }
    out.push_back(std::move(cells));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HausUni distance

/// A function sampled on a finite point set in R^N.
template <std::size_t N>
struct FunctionSample {
  std::vector<std::array<double, N>> points;
  std::vector<double> values;
};

namespace detail {

template <std::size_t N>
double directed_hausuni(const FunctionSample<N>& a, const FunctionSample<N>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    double best = kInf;
    for (std::size_t j = 0; j < b.points.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        const double dk = a.points[i][k] - b.points[j][k];
        d2 += dk * dk;
      }
      const double gap = std::max(std::sqrt(d2), std::abs(a.values[i] - b.values[j]));
      best = std::min(best, gap);
      // This point cannot raise the running maximum any more.
      if (best <= worst) break;
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

/// Smallest e such that every sample of each pair is matched within e in space and in value
/// by a sample of the other.
template <std::size_t N>
double hausuni_distance(const FunctionSample<N>& a, const FunctionSample<N>& b) {
  if (a.points.empty() || b.points.empty()) throw std::invalid_argument("hausuni_distance: empty set");
  if (a.points.size() != a.values.size() || b.points.size() != b.values.size())
    throw std::invalid_argument("hausuni_distance: points and values differ in length");
  return std::max(detail::directed_hausuni(a, b), detail::directed_hausuni(b, a));
}

}  // namespace cle
