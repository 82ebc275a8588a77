#pragma once

// Batch driver behind the `cle` tool: one function per subcommand, each writing a fixed set
// of artifacts into the output directory. CSVs depend only on (config, seed); the manifest
// additionally records wall-clock timings.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cle/carpet.hpp"
#include "cle/checks.hpp"
#include "cle/config.hpp"
#include "cle/estimators.hpp"
#include "cle/io.hpp"
#include "cle/renormalization.hpp"

namespace cle {

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"sample", "carpet", "ball", "theta", "dims", "fourarm", "check"};
  return names;
}

/// Failure with a machine-readable kind (config, io, resource, invalid, internal).
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::string kind, const std::string& message, std::vector<std::string> details = {})
      : std::runtime_error(message), kind_(std::move(kind)), details_(std::move(details)) {}
  const std::string& kind() const noexcept { return kind_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

  int exit_code() const noexcept {
    if (kind_ == "config") return 2;
    if (kind_ == "io") return 3;
    if (kind_ == "resource") return 4;
    if (kind_ == "check") return 5;
    return 1;
  }

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["error"] = kind_;
    j["message"] = what();
    j["details"] = details_;
    return j.dump();
  }

 private:
  std::string kind_;
  std::vector<std::string> details_;
};

struct RunResult {
  RunManifest manifest;
  std::filesystem::path out_dir;
  bool checks_passed = true;
};

// ---------------------------------------------------------------------------
// Resource guard

inline constexpr std::size_t kDefaultMemLimitMb = 4096;

/// Memory limit from CLE_MAX_MEM_MB, or the default.
inline std::size_t memory_limit_mb() {
  const char* env = std::getenv("CLE_MAX_MEM_MB");
  if (!env || !*env) return kDefaultMemLimitMb;
  const auto v = detail::parse_int<std::size_t>(env);
  if (!v || *v == 0) throw ExperimentError("config", std::string("CLE_MAX_MEM_MB must be a positive integer, got '") + env + "'");
  return *v;
}

/// Rough peak bytes: per-cell working grids of every concurrently sampled ensemble.
inline double projected_bytes(const ExperimentConfig& c, const std::string& sub) {
  double cells = static_cast<double>(c.width) * c.height;
  if (sub == "theta") {
    const double w = window_cells(c.window_factor, c.scales.back());
    cells = std::max(cells, w * w);
  }
  const double per_cell = 96.0 + 24.0 * (c.depth_limit + 1);
  return cells * per_cell * std::max(1, c.workers);
}

inline void check_resources(const ExperimentConfig& c, const std::string& sub) {
  const double need_mb = projected_bytes(c, sub) / (1024.0 * 1024.0);
  const std::size_t limit = memory_limit_mb();
  if (need_mb > static_cast<double>(limit))
    throw ExperimentError("resource", "projected memory " + std::to_string(static_cast<long long>(need_mb)) +
                                          " MB exceeds limit " + std::to_string(limit) + " MB (CLE_MAX_MEM_MB)");
}

namespace detail {

class Stopwatch {
 public:
  explicit Stopwatch(RunManifest& m) : m_(m) {}
  template <class F>
  decltype(auto) stage(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      RunManifest& m;
      const std::string& name;
      std::chrono::steady_clock::time_point t0;
      ~Record() { m.timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()); }
    } rec{m_, name, t0};
    return f();
  }

 private:
  RunManifest& m_;
};

inline void add_discards(RunManifest& m, const EnsembleStats& s) {
  for (const ExtractionStats& d : s.per_depth) add_stats(m.discarded, d);
  ++m.ensembles;
}

inline LatticeDomain config_domain(const ExperimentConfig& c) { return LatticeDomain::rectangle(c.width, c.height, c.delta); }

class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, RunManifest& m) : dir_(std::move(dir)), m_(m) {}

  void write(const std::string& name, std::string_view bytes) {
    write_unlisted(name, bytes);
    m_.artifacts.push_back(name);
  }

  void write_unlisted(const std::string& name, std::string_view bytes) {
    try {
      write_file((dir_ / name).string(), bytes);
    } catch (const std::exception& e) {
      throw ExperimentError("io", e.what());
    }
  }

 private:
  std::filesystem::path dir_;
  RunManifest& m_;
};

inline CsvTable loops_table(const NestedEnsemble& ens, std::uint64_t seed, std::uint64_t hash) {
  CsvTable t({"loop_id", "depth", "parity", "parent", "vertices", "interior_cells", "bbox_x0", "bbox_y0", "bbox_x1",
              "bbox_y1"},
             seed, hash);
  for (const CleLoop& l : ens.loops) {
    const Region& r = l.interior;
    t.row() << l.id << l.depth << l.parity << l.parent << l.boundary.size() << r.count() << r.origin.x << r.origin.y
            << r.origin.x + r.mask.width() << r.origin.y + r.mask.height();
  }
  return t;
}

inline CsvTable boundaries_table(const NestedEnsemble& ens, std::uint64_t seed, std::uint64_t hash) {
  CsvTable t({"loop_id", "vertex_index", "x", "y"}, seed, hash);
  for (const CleLoop& l : ens.loops)
    for (std::size_t k = 0; k < l.boundary.size(); ++k) t.row() << l.id << k << l.boundary[k].x << l.boundary[k].y;
  return t;
}

/// Cell of the largest component of `carpet` closest to the grid centre (row-major ties).
inline std::optional<Cell> ball_center(const CellMask& carpet) {
  const CellMask comp = largest_component(carpet);
  const double cx = (carpet.width() - 1) / 2.0, cy = (carpet.height() - 1) / 2.0;
  std::optional<Cell> best;
  double best_d = kInf;
  for (Cell c : mask_cells(comp)) {
    const double d = std::hypot(c.x - cx, c.y - cy);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

/// Hop radius of the metric ball: ball_radius times the hop eccentricity of the centre.
inline std::size_t ball_hops(const ExperimentConfig& c, std::int32_t eccentricity) {
  return static_cast<std::size_t>(std::max(1L, std::lround(c.ball_radius * eccentricity)));
}

struct BallSummary {
  double eps = 0.0;
  std::size_t hops = 0;
  double radius = 0.0;
  std::size_t carpet_cells = 0;
  std::size_t ball_cells = 0;
  std::string image;
  double fraction() const { return carpet_cells ? static_cast<double>(ball_cells) / static_cast<double>(carpet_cells) : 0.0; }
};

/// Metric balls around the centre of the outer carpet, one per eps (units of delta).
inline std::vector<BallSummary> metric_balls(const ExperimentConfig& c, const NestedEnsemble& ens) {
  const CellMask carpet = build_carpet_mask(ens).outer_carpet();
  const auto centre = detail::ball_center(carpet);
  if (!centre) throw ExperimentError("invalid", "ball: the sampled carpet is empty");
  const std::int32_t ecc = detail::eccentricity(carpet, *centre);
  std::vector<BallSummary> out;
  for (double e : c.eps) {
    const DiscreteDisk disk(e * c.delta, c.delta);
    const EpsMetricField field = distance_field(carpet, disk, {*centre});
    BallSummary s;
    s.eps = e;
    s.hops = ball_hops(c, ecc);
    s.radius = disk.surrogate(s.hops);
    const double radius = s.radius;
    s.carpet_cells = count_cells(carpet);
    for (std::size_t i = 0; i < carpet.size(); ++i) {
      const auto v = field.value(carpet.cell(i));
      if (v && *v <= radius) ++s.ball_cells;
    }
    s.image = render_field(carpet, field, radius);
    out.push_back(std::move(s));
  }
  return out;
}

/// Runs one subcommand and writes its artifacts into config.out_dir.
inline RunResult run_experiment(const ExperimentConfig& c, const std::string& sub) {
  if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
    throw ExperimentError("config", "unknown subcommand '" + sub + "'");
  check_resources(c, sub);

  RunResult res;
  res.out_dir = c.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(res.out_dir, ec);
  if (ec) throw ExperimentError("io", "cannot create output directory '" + c.out_dir + "': " + ec.message());

  RunManifest& m = res.manifest;
  m.subcommand = sub;
  m.config_hash = config_hash(c);
  m.seed = c.seed;
  m.params = KappaParams::from_kappa(c.kappa);
  m.truncated_mass_bound = m.params.c * static_cast<double>(c.width) * c.height * truncated_mass_bound(c.effective_lmax());
  const std::uint64_t hash = m.config_hash;
  detail::Stopwatch clock(m);
  detail::Artifacts files(res.out_dir, m);
  const LatticeDomain dom = detail::config_domain(c);
  const int lmax = c.effective_lmax();

  if (sub == "sample") {
    const LoopSoupSample soup = clock.stage("soup", [&] { return sample_loop_soup(m.params, dom, lmax, layer_seed(c.seed, -1)); });
    CsvTable t({"loop_index", "root_x", "root_y", "length"}, c.seed, hash);
    for (std::size_t i = 0; i < soup.loops.size(); ++i)
      t.row() << i << soup.loops[i].root.x << soup.loops[i].root.y << soup.loops[i].length();
    files.write("soup.csv", t.str());
    const LayerExtraction layer = clock.stage("extract", [&] { return extract_cle_loops(cluster_loops(soup), dom); });
    detail::add_stats(m.discarded, layer.stats);
    m.ensembles = 1;
    NestedEnsemble ens{m.params, dom, c.seed, 0, lmax, layer.loops, {{layer.stats}, 1, soup.loops.size()}};
    files.write("loops.csv", detail::loops_table(ens, c.seed, hash).str());
    files.write("outer_carpet.ppm", render_mask(build_carpet_mask(ens).outer_carpet()));
  } else if (sub == "carpet") {
    const NestedEnsemble ens = clock.stage("sample", [&] { return nest_ensemble(m.params, dom, c.depth_limit, lmax, c.seed); });
    detail::add_discards(m, ens.stats);
    const CarpetMask cm = clock.stage("carpet", [&] { return build_carpet_mask(ens); });
    files.write("ensemble.cle", save_ensemble(ens));
    files.write("loops.csv", detail::loops_table(ens, c.seed, hash).str());
    files.write("boundaries.csv", detail::boundaries_table(ens, c.seed, hash).str());
    CsvTable pieces({"piece", "depth", "parity", "cells"}, c.seed, hash);
    std::vector<std::size_t> sizes(ens.loops.size() + 1, 0);
    for (std::int32_t id : cm.label.data())
      if (id >= CarpetMask::kOuterCarpet) ++sizes[static_cast<std::size_t>(id + 1)];
    pieces.row() << -1 << -1 << -1 << sizes[0];
    for (const CleLoop& l : ens.loops) pieces.row() << l.id << l.depth << l.parity << sizes[static_cast<std::size_t>(l.id + 1)];
    files.write("pieces.csv", pieces.str());
    files.write("outer_carpet.ppm", render_mask(cm.outer_carpet()));
    files.write("upsilon.ppm", render_mask(cm.upsilon));
  } else if (sub == "ball") {
    const NestedEnsemble ens = clock.stage("sample", [&] { return nest_ensemble(m.params, dom, 0, lmax, c.seed); });
    detail::add_discards(m, ens.stats);
    const auto balls = clock.stage("balls", [&] { return metric_balls(c, ens); });
    CsvTable t({"eps", "image", "hops", "radius", "carpet_cells", "ball_cells", "fraction"}, c.seed, hash);
    for (std::size_t i = 0; i < balls.size(); ++i) {
      const std::string name = "ball_eps" + std::to_string(i) + ".ppm";
      files.write(name, balls[i].image);
      t.row() << balls[i].eps << name << balls[i].hops << balls[i].radius << balls[i].carpet_cells
              << balls[i].ball_cells << balls[i].fraction();
    }
    files.write("ball.csv", t.str());
  } else if (sub == "theta") {
    CsvTable scaling({"eps", "r", "c_r", "samples", "stderr", "unqualified"}, c.seed, hash);
    CsvTable theta({"eps", "theta_hat", "ci_low", "ci_high", "r2", "max_residual", "scales_used", "theta_deng",
                    "dim_carpet", "theta_upper", "within_bounds", "sandwich_lower_holds", "K_hat"},
                   c.seed, hash);
    CsvTable sandwich({"eps", "r_small", "r_large", "ratio_r", "ratio_c", "lower_ok"}, c.seed, hash);
    CsvTable keps({"eps", "kappa_eps", "qualified", "unqualified"}, c.seed, hash);
    for (std::size_t k = 0; k < c.eps.size(); ++k) {
      ScalingConfig sc;
      sc.scales = c.scales;
      sc.eps = c.eps[k];
      sc.samples = static_cast<std::size_t>(c.samples);
      sc.centers = c.centers;
      sc.window_factor = c.window_factor;
      sc.workers = c.workers;
      const std::uint64_t s = derive_seed(c.seed, k);
      const ScalingTable table = clock.stage("scaling_" + std::to_string(k), [&] { return scaling_constants(m.params, sc, s); });
      for (const ScalingRow& row : table.rows)
        scaling.row() << c.eps[k] << row.r << row.c_r << row.samples << row.stderr_c << row.unqualified;
      const SandwichReport sw = sandwich_check(table);
      for (const SandwichPair& p : sw.pairs) sandwich.row() << c.eps[k] << p.r_small << p.r_large << p.eps << p.ratio << p.lower_ok;
      try {
        const ThetaFit f = fit_theta(table);
        theta.row() << c.eps[k] << f.theta_hat << f.ci_low << f.ci_high << f.r2 << f.max_residual << f.scales_used
                    << f.theta_deng << f.dim_carpet << f.theta_upper << f.within_bounds(f.ci_high - f.theta_hat)
                    << sw.lower_holds << sw.K_hat;
      } catch (const std::invalid_argument&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        theta.row() << c.eps[k] << nan << nan << nan << nan << nan << 0 << m.params.theta_deng << m.params.dim_carpet
                    << m.params.theta_upper << false << sw.lower_holds << sw.K_hat;
      }
      WindowConfig w;
      w.cells = std::min(c.width, c.height);
      w.depth_limit = std::max(1, c.depth_limit);
      w.lmax = c.lmax;
      w.workers = c.workers;
      const KappaEpsResult ke = clock.stage("kappa_eps_" + std::to_string(k), [&] {
        return kappa_eps(m.params, w, c.eps[k] * w.delta(), static_cast<std::size_t>(c.samples), derive_seed(s, 0xCE));
      });
      keps.row() << c.eps[k] << ke.median.value_or(std::numeric_limits<double>::quiet_NaN()) << ke.values.size() << ke.unqualified;
    }
    files.write("scaling.csv", scaling.str());
    files.write("theta.csv", theta.str());
    files.write("sandwich.csv", sandwich.str());
    files.write("kappa_eps.csv", keps.str());
  } else if (sub == "dims") {
    struct Replica {
      BoxDimension outer, upsilon;
      EnsembleStats stats;
    };
    const auto reps = clock.stage("replicas", [&] {
      return parallel_map(static_cast<std::size_t>(c.samples), c.workers, [&](std::size_t i) {
        const NestedEnsemble ens = nest_ensemble(m.params, dom, c.depth_limit, lmax, derive_seed(c.seed, i));
        const CarpetMask cm = build_carpet_mask(ens);
        return Replica{box_dimension(cm.outer_carpet()), box_dimension(cm.upsilon), ens.stats};
      });
    });
    for (const Replica& r : reps) detail::add_discards(m, r.stats);
    CsvTable dims({"set", "dimension", "ci_low", "ci_high", "replicas", "target"}, c.seed, hash);
    CsvTable boxes({"set", "replica", "box_size", "box_count"}, c.seed, hash);
    auto summarise = [&](const char* name, auto member) {
      std::vector<double> d;
      for (std::size_t i = 0; i < reps.size(); ++i) {
        const BoxDimension& b = reps[i].*member;
        d.push_back(b.dimension);
        for (std::size_t k = 0; k < b.box_sizes.size(); ++k) boxes.row() << name << i << b.box_sizes[k] << b.box_counts[k];
      }
      const double mu = mean(d);
      const double half = d.size() > 1 ? t_quantile_975(d.size() - 1) * stddev(d) / std::sqrt(static_cast<double>(d.size())) : 0.0;
      dims.row() << name << mu << mu - half << mu + half << d.size() << m.params.dim_carpet;
    };
    summarise("outer_carpet", &Replica::outer);
    summarise("upsilon", &Replica::upsilon);
    const BoxDimension sier = clock.stage("sierpinski", [] { return box_dimension(sierpinski_carpet(6)); });
    dims.row() << "sierpinski_6" << sier.dimension << sier.ci_low << sier.ci_high << 1 << std::log(8.0) / std::log(3.0);
    files.write("dims.csv", dims.str());
    files.write("boxes.csv", boxes.str());
  } else if (sub == "fourarm") {
    const double tmax = c.arm_inner * c.arm_ratios.back();
    const auto centers = arm_centers(dom, tmax, c.arm_spacing);
    if (centers.empty()) throw ExperimentError("invalid", "fourarm: grid too small for the outer annulus radius");
    const auto accs = clock.stage("replicas", [&] {
      return parallel_map(static_cast<std::size_t>(c.samples), c.workers, [&](std::size_t i) {
        const NestedEnsemble ens = nest_ensemble(m.params, dom, c.depth_limit, lmax, derive_seed(c.seed, i));
        FourArmAccumulator acc(c.arm_inner, c.arm_ratios);
        acc.add(ens, centers);
        return std::make_pair(acc, ens.stats);
      });
    });
    FourArmAccumulator total(c.arm_inner, c.arm_ratios);
    for (const auto& [acc, stats] : accs) {
      total.merge(acc);
      detail::add_discards(m, stats);
    }
    const FourArmReport rep = total.report(m.params.alpha_4a);
    CsvTable t({"ratio", "s", "t", "events", "annuli", "frequency"}, c.seed, hash);
    for (std::size_t k = 0; k < rep.ratios.size(); ++k)
      t.row() << rep.ratios[k] << rep.inner_radius << rep.inner_radius * rep.ratios[k] << rep.events[k] << rep.annuli
              << rep.frequency[k];
    files.write("fourarm.csv", t.str());
    CsvTable fit({"slope", "alpha_target", "strictly_decreasing", "excluded_ratios"}, c.seed, hash);
    fit.row() << rep.slope << rep.alpha_target << rep.strictly_decreasing() << rep.excluded_ratios.size();
    files.write("fourarm_fit.csv", fit.str());
  } else if (sub == "check") {
    CheckOptions opt;
    opt.kappa = c.kappa;
    opt.grid = std::min(c.width, c.height);
    opt.depth_limit = c.depth_limit;
    opt.seed = c.seed;
    const auto results = clock.stage("properties", [&] { return run_property_suite(opt); });
    CsvTable t({"property", "instances", "failures", "passed", "first_failure"}, c.seed, hash);
    for (const PropertyResult& r : results) {
      t.row() << r.name << r.instances << r.failures << r.passed() << (r.first_failure.empty() ? "-" : r.first_failure);
      res.checks_passed = res.checks_passed && r.passed();
    }
    files.write("check.csv", t.str());
  }

  // The manifest lists itself, so the on-disk copy and the returned one agree.
  m.artifacts.push_back("manifest.json");
  files.write_unlisted("manifest.json", m.to_json().dump(2) + "\n");
  return res;
}

}  // namespace cle
