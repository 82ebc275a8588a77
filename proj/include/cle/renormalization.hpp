#pragma once

// The renormalisation constant kappa_eps: median over independent ensembles of the
// eps-MFPP diameter of the carpet piece X(L1), where L1 is the largest loop contained in
// the unit ball and surrounding the origin.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "cle/carpet.hpp"
#include "cle/mfpp.hpp"
#include "cle/parallel.hpp"
#include "cle/stats.hpp"

namespace cle {

/// Square window [-half_extent, half_extent]^2 discretised into cells x cells.
struct WindowConfig {
  int cells = 256;
  double half_extent = 1.25;
  int depth_limit = 2;
  int lmax = 0;  // 0: cells^2
  int workers = 1;

  double delta() const noexcept { return 2.0 * half_extent / cells; }
  int effective_lmax() const noexcept {
    if (lmax > 0) return lmax;
    const long long a = static_cast<long long>(cells) * cells;
    return static_cast<int>(std::max<long long>(4, a + (a % 2)));
  }
};

/// Id of the largest-interior loop whose boundary lies in the closed unit ball and whose
/// interior contains the origin cell.
inline std::optional<int> largest_loop_around_origin(const NestedEnsemble& ens, const WindowConfig& w) {
  const double delta = w.delta();
  const Cell origin_cell{static_cast<int>(std::floor(w.half_extent / delta)),
                         static_cast<int>(std::floor(w.half_extent / delta))};
  std::optional<int> best;
  std::size_t best_area = 0;
  for (const CleLoop& l : ens.loops) {
    if (!l.interior.contains(origin_cell)) continue;
    bool inside = true;
    for (Vertex v : l.boundary) {
      const double px = v.x * delta - w.half_extent, py = v.y * delta - w.half_extent;
      if (px * px + py * py > 1.0) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    const std::size_t area = l.interior.count();
    if (!best || area > best_area) {
      best = l.id;
      best_area = area;
    }
  }
  return best;
}

/// Largest 4-connected component of a mask (first in row-major order on ties).
inline CellMask largest_component(const CellMask& m) {
  Grid<std::int32_t> labels;
  const int n = label_components(m, labels);
  CellMask out(m.width(), m.height(), 0);
  if (n == 0) return out;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(n), 0);
  for (std::int32_t l : labels.data())
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  const auto best = static_cast<std::int32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < labels.size(); ++i) out.at_index(i) = labels.at_index(i) == best ? 1 : 0;
  return out;
}

/// Hop diameter of X(L1) for replica `index`, or nullopt when no loop qualifies (none
/// exists, or its inner layer was not sampled because of the depth limit).
inline std::optional<std::int32_t> replica_piece_diameter(const KappaParams& params, const WindowConfig& w,
                                                          std::uint64_t master_seed, std::size_t index) {
  const LatticeDomain dom = LatticeDomain::rectangle(w.cells, w.cells, w.delta());
  const NestedEnsemble ens = nest_ensemble(params, dom, w.depth_limit, w.effective_lmax(), derive_seed(master_seed, index));
  const auto id = largest_loop_around_origin(ens, w);
  if (!id || ens.loops[static_cast<std::size_t>(*id)].depth >= w.depth_limit) return std::nullopt;
  const CarpetMask cm = build_carpet_mask(ens);
  const CellMask piece = largest_component(cm.piece(*id));
  if (count_cells(piece) == 0) return std::nullopt;
  return hop_diameter(piece);
}

struct KappaEpsResult {
  std::optional<double> median;     // nullopt when every replica was unqualified
  std::vector<double> values;       // qualified replica values in replica order
  std::size_t unqualified = 0;
};

inline KappaEpsResult kappa_eps_from_diameters(const std::vector<std::optional<std::int32_t>>& diam,
                                               const DiscreteDisk& disk) {
  KappaEpsResult r;
  for (const auto& d : diam) {
    if (d)
      r.values.push_back(disk.surrogate(static_cast<std::size_t>(*d)));
    else
      ++r.unqualified;
  }
  if (!r.values.empty()) r.median = median(r.values);
  return r;
}

/// kappa_eps with eps in plane units.
inline KappaEpsResult kappa_eps(const KappaParams& params, const WindowConfig& w, double eps, std::size_t n_samples,
                                std::uint64_t master_seed) {
  if (n_samples == 0) throw std::invalid_argument("kappa_eps: n_samples must be >= 1");
  const DiscreteDisk disk(eps, w.delta());
  const auto diam = parallel_map(n_samples, w.workers,
                                 [&](std::size_t i) { return replica_piece_diameter(params, w, master_seed, i); });
  return kappa_eps_from_diameters(diam, disk);
}

}  // namespace cle
