#pragma once

// Artifact I/O: CSV tables, PPM rendering of distance fields, the CLECARPET v1 ensemble text
// format and the JSON run manifest. Format details live in docs/format.md.

#include <algorithm>
#include <array>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cle/carpet.hpp"
#include "cle/config.hpp"
#include "cle/mfpp.hpp"

namespace cle {

inline constexpr std::string_view kToolVersion = "1.0.0";

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_real(v);
}

/// Fixed-schema CSV table. The first line is a `#` comment carrying the master seed and the
/// config hash; the second is the header.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> header, std::uint64_t seed, std::uint64_t hash)
      : header_(std::move(header)), seed_(seed), hash_(hash) {}

  class Row {
   public:
    Row& operator<<(double v) { return push(csv_number(v)); }
    Row& operator<<(bool v) { return push(v ? "1" : "0"); }
    template <std::integral I>
    Row& operator<<(I v) {
      return push(std::to_string(v));
    }
    Row& operator<<(std::string_view s) { return push(quote(s)); }
    Row& operator<<(const char* s) { return push(quote(s)); }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    static std::string quote(std::string_view s) {
      if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    Row& push(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    std::vector<std::string>& cells_;
  };

  Row row() {
    if (!rows_.empty() && rows_.back().size() != header_.size())
      throw std::logic_error("CsvTable: row has " + std::to_string(rows_.back().size()) + " fields, expected " +
                             std::to_string(header_.size()));
    rows_.emplace_back();
    return Row(rows_.back());
  }

  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<std::string>& header() const noexcept { return header_; }

  std::string str() const {
    std::string out = "# seed=" + std::to_string(seed_) + " config_hash=" + hex64(hash_) + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      if (cells.size() != header_.size()) throw std::logic_error("CsvTable: ragged row");
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::uint64_t seed_;
  std::uint64_t hash_;
};

// ---------------------------------------------------------------------------
// PPM rendering

using Rgb = std::array<std::uint8_t, 3>;

namespace detail {

constexpr std::array<Rgb, 256> make_palette() {
  // Piecewise-linear through five anchors (dark violet to yellow).
  constexpr std::array<Rgb, 5> anchors{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  std::array<Rgb, 256> p{};
  for (int i = 0; i < 256; ++i) {
    const int seg = std::min(3, i * 4 / 255);
    const int lo = seg * 255 / 4;
    const int hi = (seg + 1) * 255 / 4;
    const int t = i - lo, span = hi - lo;
    for (int k = 0; k < 3; ++k) {
      const int a = anchors[static_cast<std::size_t>(seg)][static_cast<std::size_t>(k)];
      const int b = anchors[static_cast<std::size_t>(seg) + 1][static_cast<std::size_t>(k)];
      const int num = (b - a) * t;  // rounded half away from zero
      const int step = num >= 0 ? (num + span / 2) / span : -((-num + span / 2) / span);
      p[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(a + step);
    }
  }
  return p;
}

}  // namespace detail

inline constexpr std::array<Rgb, 256> kPalette = detail::make_palette();
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kUnreachedGray{128, 128, 128};

/// P6 image of a distance field over a carpet mask. Cells outside `carpet` are black; carpet
/// cells that are unreachable (or beyond `cutoff`) are gray; the rest are coloured by the
/// normalised rank of their value among the distinct values shown. Row 0 of the image is the
/// top grid row.
inline std::string render_field(const CellMask& carpet, const EpsMetricField& field,
                                std::optional<double> cutoff = std::nullopt) {
  if (carpet.width() != field.width() || carpet.height() != field.height())
    throw std::invalid_argument("render_field: mask and field sizes differ");
  auto shown = [&](Cell c) -> std::optional<double> {
    if (!carpet[c]) return std::nullopt;
    const auto v = field.value(c);
    if (!v || (cutoff && *v > *cutoff)) return std::nullopt;
    return v;
  };
  std::vector<double> values;
  for (int y = 0; y < carpet.height(); ++y)
    for (int x = 0; x < carpet.width(); ++x)
      if (const auto v = shown({x, y})) values.push_back(*v);
  if (values.empty()) throw std::invalid_argument("render_field: no finite value to render");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t levels = values.size();

  std::string out = "P6\n" + std::to_string(carpet.width()) + " " + std::to_string(carpet.height()) + "\n255\n";
  out.reserve(out.size() + 3 * static_cast<std::size_t>(carpet.width()) * static_cast<std::size_t>(carpet.height()));
  for (int y = carpet.height() - 1; y >= 0; --y)
    for (int x = 0; x < carpet.width(); ++x) {
      Rgb px = kBlack;
      if (carpet(x, y)) {
        px = kUnreachedGray;
        if (const auto v = shown({x, y})) {
          const auto rank = static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), *v) - values.begin());
          const std::size_t idx = levels > 1 ? rank * 255 / (levels - 1) : 0;
          px = kPalette[idx];
        }
      }
      out.append(reinterpret_cast<const char*>(px.data()), 3);
    }
  return out;
}

/// Two-colour P6 image of a mask (set cells white). Row 0 is the top grid row.
inline std::string render_mask(const CellMask& m) {
  std::string out = "P6\n" + std::to_string(m.width()) + " " + std::to_string(m.height()) + "\n255\n";
  for (int y = m.height() - 1; y >= 0; --y)
    for (int x = 0; x < m.width(); ++x) out.append(3, m(x, y) ? '\xff' : '\0');
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble text format

inline constexpr std::string_view kEnsembleMagic = "CLECARPET v1";

class EnsembleFormatError : public std::runtime_error {
 public:
  EnsembleFormatError(std::size_t offset, const std::string& what)
      : std::runtime_error("ensemble file, byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

inline std::string save_ensemble(const NestedEnsemble& ens) {
  std::ostringstream os;
  const LatticeDomain& d = ens.domain;
  os << kEnsembleMagic << '\n'
     << "kappa " << detail::format_real(ens.params.kappa) << '\n'
     << "delta " << detail::format_real(d.delta()) << '\n'
     << "domain " << d.origin().x << ' ' << d.origin().y << ' ' << d.width() << ' ' << d.height() << '\n';
  if (count_cells(d.allowed()) == d.allowed().size()) {
    os << "allowed full\n";
  } else {
    os << "allowed rows\n";
    for (int y = 0; y < d.height(); ++y) {
      for (int x = 0; x < d.width(); ++x) os << (d.allowed()(x, y) ? '1' : '0');
      os << '\n';
    }
  }
  os << "seed " << ens.seed << '\n'
     << "depth_limit " << ens.depth_limit << '\n'
     << "lmax " << ens.lmax << '\n'
     << "soups " << ens.stats.soups << ' ' << ens.stats.soup_loops << '\n';
  for (std::size_t k = 0; k < ens.stats.per_depth.size(); ++k) {
    const ExtractionStats& s = ens.stats.per_depth[k];
    os << "depth_stats " << k << ' ' << s.clusters << ' ' << s.boundary_discarded << ' ' << s.nested_discarded << '\n';
  }
  os << "loops " << ens.loops.size() << '\n';
  for (const CleLoop& l : ens.loops) {
    os << "loop " << l.id << ' ' << l.depth << ' ' << l.parity << ' ' << l.parent << ' ' << l.boundary.size();
    for (Vertex v : l.boundary) os << ' ' << v.x << ' ' << v.y;
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

/// Cells enclosed by a closed rectilinear polygon with unit edges (even-odd rule per row).
inline Region polygon_interior(std::span<const Vertex> poly) {
  if (poly.size() < 4) throw std::invalid_argument("polygon_interior: fewer than 4 vertices");
  int x0 = poly[0].x, x1 = x0, y0 = poly[0].y, y1 = y0;
  for (Vertex v : poly) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  std::vector<std::vector<int>> crossings(static_cast<std::size_t>(y1 - y0));
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vertex a = poly[i], b = poly[(i + 1) % poly.size()];
    if (a.x == b.x && a.y != b.y) crossings[static_cast<std::size_t>(std::min(a.y, b.y) - y0)].push_back(a.x - x0);
  }
  Region r{{x0, y0}, CellMask(x1 - x0, y1 - y0, 0)};
  for (std::size_t row = 0; row < crossings.size(); ++row) {
    auto& xs = crossings[row];
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2)
      for (int x = xs[k]; x < xs[k + 1]; ++x) r.mask(x, static_cast<int>(row)) = 1;
  }
  return r;
}

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ >= text_.size(); }

  [[noreturn]] void fail(const std::string& what) const { throw EnsembleFormatError(pos_, what); }

  /// Next line without its terminator; fails at end of input.
  std::string_view line(const char* expecting) {
    if (at_end()) fail(std::string("unexpected end of file, expecting ") + expecting);
    const std::size_t nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) fail(std::string("truncated line, expecting ") + expecting);
    line_start_ = pos_;
    const std::string_view l = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return l;
  }

  std::size_t line_start() const noexcept { return line_start_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
};

/// Whitespace-separated fields of a line after its keyword.
class Fields {
 public:
  Fields(std::string_view line, std::size_t offset, std::string_view keyword) : line_(line), base_(offset) {
    const std::string_view k = next("keyword");
    if (k != keyword) throw EnsembleFormatError(base_, "expected '" + std::string(keyword) + "', found '" + std::string(k) + "'");
  }

  std::string_view next(const char* what) {
    while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
    if (pos_ >= line_.size()) throw EnsembleFormatError(base_ + pos_, std::string("missing ") + what);
    const std::size_t b = pos_;
    while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
    return line_.substr(b, pos_ - b);
  }

  template <class T>
  T number(const char* what) {
    const std::size_t at = base_ + pos_;
    const std::string_view tok = next(what);
    if constexpr (std::is_floating_point_v<T>) {
      const auto v = parse_real(tok);
      if (!v) throw EnsembleFormatError(at, std::string("bad ") + what + " '" + std::string(tok) + "'");
      return static_cast<T>(*v);
    } else {
      const auto v = parse_int<T>(tok);
      if (!v) throw EnsembleFormatError(at, std::string("bad ") + what + " '" + std::string(tok) + "'");
      return *v;
    }
  }

  void finish() {
    while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
    if (pos_ != line_.size()) throw EnsembleFormatError(base_ + pos_, "trailing data");
  }

  std::size_t offset() const noexcept { return base_ + pos_; }

 private:
  std::string_view line_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses and re-validates an ensemble. Interiors are recomputed from the polygons.
inline NestedEnsemble load_ensemble(std::string_view text) {
  detail::Reader in(text);
  if (in.line("version header") != kEnsembleMagic)
    throw EnsembleFormatError(0, "version mismatch: expected '" + std::string(kEnsembleMagic) + "'");

  auto fields = [&](std::string_view keyword) {
    const std::string_view l = in.line(std::string(keyword).c_str());
    return detail::Fields(l, in.line_start(), keyword);
  };

  NestedEnsemble ens;
  {
    auto f = fields("kappa");
    const double kappa = f.number<double>("kappa");
    f.finish();
    if (!kappa_in_range(kappa)) throw EnsembleFormatError(in.line_start(), "kappa outside (8/3, 4)");
    ens.params = KappaParams::from_kappa(kappa);
  }
  double delta = 0.0;
  {
    auto f = fields("delta");
    delta = f.number<double>("delta");
    f.finish();
    if (!(delta > 0.0)) throw EnsembleFormatError(in.line_start(), "delta must be positive");
  }
  Cell origin{};
  int w = 0, h = 0;
  {
    auto f = fields("domain");
    origin.x = f.number<int>("origin x");
    origin.y = f.number<int>("origin y");
    w = f.number<int>("width");
    h = f.number<int>("height");
    f.finish();
    if (w < 1 || h < 1 || w > 65536 || h > 65536) throw EnsembleFormatError(in.line_start(), "domain size out of range");
  }
  CellMask allowed(w, h, 1);
  {
    auto f = fields("allowed");
    const std::string_view mode = f.next("allowed mode");
    f.finish();
    if (mode == "rows") {
      for (int y = 0; y < h; ++y) {
        const std::string_view row = in.line("allowed row");
        if (row.size() != static_cast<std::size_t>(w)) throw EnsembleFormatError(in.line_start(), "allowed row has wrong length");
        for (int x = 0; x < w; ++x) {
          const char c = row[static_cast<std::size_t>(x)];
          if (c != '0' && c != '1') throw EnsembleFormatError(in.line_start() + static_cast<std::size_t>(x), "allowed row must be 0/1");
          allowed(x, y) = c == '1';
        }
      }
    } else if (mode != "full") {
      throw EnsembleFormatError(in.line_start(), "allowed mode must be 'full' or 'rows'");
    }
  }
  try {
    ens.domain = LatticeDomain(delta, std::move(allowed), origin);
  } catch (const std::invalid_argument& e) {
    throw EnsembleFormatError(in.line_start(), e.what());
  }
  {
    auto f = fields("seed");
    ens.seed = f.number<std::uint64_t>("seed");
    f.finish();
  }
  {
    auto f = fields("depth_limit");
    ens.depth_limit = f.number<int>("depth_limit");
    f.finish();
    if (ens.depth_limit < 0 || ens.depth_limit > 64) throw EnsembleFormatError(in.line_start(), "depth_limit out of range");
  }
  {
    auto f = fields("lmax");
    ens.lmax = f.number<int>("lmax");
    f.finish();
  }
  {
    auto f = fields("soups");
    ens.stats.soups = f.number<std::size_t>("soup count");
    ens.stats.soup_loops = f.number<std::size_t>("soup loop count");
    f.finish();
  }
  for (int k = 0; k <= ens.depth_limit; ++k) {
    auto f = fields("depth_stats");
    if (f.number<int>("depth") != k) throw EnsembleFormatError(in.line_start(), "depth_stats out of order");
    ExtractionStats s;
    s.clusters = f.number<std::size_t>("clusters");
    s.boundary_discarded = f.number<std::size_t>("boundary_discarded");
    s.nested_discarded = f.number<std::size_t>("nested_discarded");
    f.finish();
    ens.stats.per_depth.push_back(s);
  }
  std::size_t count = 0;
  {
    auto f = fields("loops");
    count = f.number<std::size_t>("loop count");
    f.finish();
  }
  for (std::size_t i = 0; i < count; ++i) {
    auto f = fields("loop");
    const std::size_t at = in.line_start();
    CleLoop l;
    l.id = f.number<int>("id");
    l.depth = f.number<int>("depth");
    l.parity = f.number<int>("parity");
    l.parent = f.number<int>("parent");
    const auto nv = f.number<std::size_t>("vertex count");
    if (l.id != static_cast<int>(i)) throw EnsembleFormatError(at, "loop ids must be 0, 1, 2, ...");
    if (nv < 4 || nv > 4 * static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h + 1))
      throw EnsembleFormatError(at, "vertex count out of range");
    l.boundary.reserve(nv);
    for (std::size_t k = 0; k < nv; ++k) {
      const int x = f.number<int>("vertex x");
      const int y = f.number<int>("vertex y");
      l.boundary.push_back({x, y});
    }
    f.finish();
    for (std::size_t k = 0; k < nv; ++k) {
      const Vertex a = l.boundary[k], b = l.boundary[(k + 1) % nv];
      if (std::abs(a.x - b.x) + std::abs(a.y - b.y) != 1) throw EnsembleFormatError(at, "polygon edges must be unit steps");
    }
    if (l.parent == kNoParent) {
      if (l.depth != 0) throw EnsembleFormatError(at, "root loop must have depth 0");
    } else {
      if (l.parent < 0 || l.parent >= l.id) throw EnsembleFormatError(at, "parent must precede its child");
      const CleLoop& p = ens.loops[static_cast<std::size_t>(l.parent)];
      if (l.depth != p.depth + 1) throw EnsembleFormatError(at, "depth must be parent depth + 1");
      if (l.parity == p.parity) throw EnsembleFormatError(at, "parity violation: child shares its parent's parity");
    }
    if (l.parity != 0 && l.parity != 1) throw EnsembleFormatError(at, "parity must be 0 or 1");
    if (l.depth > ens.depth_limit) throw EnsembleFormatError(at, "loop deeper than depth_limit");
    l.interior = polygon_interior(l.boundary);
    if (l.interior.count() == 0) throw EnsembleFormatError(at, "polygon encloses no cell");
    try {
      if (trace_boundary(l.interior) != l.boundary)
        throw EnsembleFormatError(at, "polygon is not the canonical counter-clockwise boundary of its interior");
    } catch (const std::logic_error& e) {
      throw EnsembleFormatError(at, e.what());
    }
    ens.loops.push_back(std::move(l));
  }
  {
    const std::string_view l = in.line("end");
    if (detail::trim(l) != "end") throw EnsembleFormatError(in.line_start(), "expected 'end'");
  }
  if (!in.at_end()) throw EnsembleFormatError(in.offset(), "trailing data after 'end'");
  return ens;
}

// ---------------------------------------------------------------------------
// Files and manifest

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct RunManifest {
  std::string subcommand;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> timings;  // seconds, in stage order
  double truncated_mass_bound = 0.0;
  ExtractionStats discarded;
  std::size_t ensembles = 0;
  KappaParams params;
  std::vector<std::string> artifacts;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "cle";
    j["tool_version"] = std::string(kToolVersion);
    j["subcommand"] = subcommand;
    j["config_hash"] = hex64(config_hash);
    j["seed"] = seed;
    j["kappa"] = {{"kappa", params.kappa},
                  {"central_charge", params.c},
                  {"alpha_4a", params.alpha_4a},
                  {"dim_carpet", params.dim_carpet},
                  {"theta_deng", params.theta_deng},
                  {"theta_upper", params.theta_upper}};
    j["truncated_mass_bound"] = truncated_mass_bound;
    j["ensembles"] = ensembles;
    j["clusters"] = discarded.clusters;
    j["boundary_discarded"] = discarded.boundary_discarded;
    j["nested_discarded"] = discarded.nested_discarded;
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& [stage, secs] : timings) t[stage] = secs;
    j["timings_s"] = t;
    j["artifacts"] = artifacts;
    return j;
  }
};

}  // namespace cle
