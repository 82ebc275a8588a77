#pragma once

// Experiment configuration: a UTF-8 text file with one `key = value` per line and `#`
// comments. Lengths (eps, scales, arm_inner, arm_spacing) are in lattice units.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cle/kappa.hpp"

namespace cle {

struct ExperimentConfig {
  double kappa = 3.0;
  int width = 0;
  int height = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  int lmax = 0;  // 0: width * height
  int depth_limit = 2;
  std::vector<double> eps{0.5};
  std::vector<double> scales{8, 16, 32, 64, 128, 256};
  int samples = 20;
  int centers = 5;
  double window_factor = 4.0;
  double arm_inner = 8.0;
  std::vector<double> arm_ratios{2, 4, 8};
  double arm_spacing = 16.0;
  double ball_radius = 0.5;  // fraction of the centre's hop eccentricity
  int workers = 1;
  std::string out_dir = "out";

  int effective_lmax() const {
    if (lmax > 0) return lmax;
    const long long a = static_cast<long long>(width) * height;
    return static_cast<int>(std::max<long long>(4, a + (a % 2)));
  }

  bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigError {
  int line = 0;  // 0 when the error is not tied to a line (missing key)
  std::string key;
  std::string message;

  std::string to_string() const {
    return (line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) + key + ": " + message;
  }
};

struct ConfigParse {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const noexcept { return config.has_value(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Decimal number or a fraction a/b.
inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const auto a = parse_real(s.substr(0, slash));
    const auto b = parse_real(s.substr(slash + 1));
    if (!a || !b || *b == 0.0) return std::nullopt;
    return *a / *b;
  }
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::vector<double>> parse_list(std::string_view s) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    const auto v = parse_real(s.substr(0, comma));
    if (!v) return std::nullopt;
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_real(v[i]);
  return out;
}

inline bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

}  // namespace detail

/// Parses and validates a configuration, collecting every error.
inline ConfigParse parse_config(std::string_view text) {
  ConfigParse out;
  ExperimentConfig cfg;
  std::map<std::string, int, std::less<>> seen;
  auto error = [&](int line, std::string key, std::string msg) {
    out.errors.push_back({line, std::move(key), std::move(msg)});
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      error(line_no, std::string(line), "expected key = value");
      continue;
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (seen.contains(key)) {
      error(line_no, key, "duplicate key (first on line " + std::to_string(seen[key]) + ")");
      continue;
    }
    seen[key] = line_no;

    auto real = [&](double& dst, double lo, double hi, bool open_lo, bool open_hi, const std::string& range) {
      const auto v = detail::parse_real(value);
      if (!v) return error(line_no, key, "not a number: '" + std::string(value) + "'");
      const bool ok = (open_lo ? *v > lo : *v >= lo) && (open_hi ? *v < hi : *v <= hi);
      if (!ok) return error(line_no, key, "value " + detail::format_real(*v) + " out of range " + range);
      dst = *v;
    };
    auto integer = [&](int& dst, long long lo, long long hi) {
      const auto v = detail::parse_int<long long>(value);
      if (!v) return error(line_no, key, "not an integer: '" + std::string(value) + "'");
      if (*v < lo || *v > hi)
        return error(line_no, key, "value " + std::to_string(*v) + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      dst = static_cast<int>(*v);
    };
    auto list = [&](std::vector<double>& dst, double lo, bool increasing, const std::string& what) {
      const auto v = detail::parse_list(value);
      if (!v) return error(line_no, key, "not a comma-separated list of numbers");
      for (double x : *v)
        if (!(x > lo)) return error(line_no, key, what);
      if (increasing && !detail::strictly_increasing(*v)) return error(line_no, key, "values must be strictly increasing");
      dst = *v;
    };

    if (key == "kappa") {
      real(cfg.kappa, kKappaMin, kKappaMax, true, true, "(8/3, 4)");
    } else if (key == "grid") {
      const auto x = value.find_first_of("xX");
      const auto w = x == std::string_view::npos ? std::nullopt : detail::parse_int<int>(value.substr(0, x));
      const auto h = x == std::string_view::npos ? std::nullopt : detail::parse_int<int>(value.substr(x + 1));
      if (!w || !h)
        error(line_no, key, "expected WIDTHxHEIGHT");
      else if (*w < 1 || *h < 1 || *w > 16384 || *h > 16384)
        error(line_no, key, "dimensions out of range [1, 16384]");
      else {
        cfg.width = *w;
        cfg.height = *h;
      }
    } else if (key == "delta") {
      real(cfg.delta, 0.0, 1e300, true, false, "(0, inf)");
    } else if (key == "seed") {
      const auto v = detail::parse_int<std::uint64_t>(value);
      if (!v)
        error(line_no, key, "not an unsigned 64-bit integer");
      else
        cfg.seed = *v;
    } else if (key == "lmax") {
      integer(cfg.lmax, 0, 1LL << 30);
      if (cfg.lmax != 0 && (cfg.lmax < 4 || cfg.lmax % 2 != 0)) error(line_no, key, "must be 0 (auto) or an even integer >= 4");
    } else if (key == "depth_limit") {
      integer(cfg.depth_limit, 0, 16);
    } else if (key == "eps") {
      list(cfg.eps, 0.0, false, "values must be positive");
    } else if (key == "scales") {
      list(cfg.scales, 1.999999, true, "values must be >= 2");
    } else if (key == "samples") {
      integer(cfg.samples, 1, 1000000);
    } else if (key == "centers") {
      integer(cfg.centers, 1, 9);
    } else if (key == "window_factor") {
      real(cfg.window_factor, 2.5, 64.0, false, false, "[2.5, 64]");
    } else if (key == "arm_inner") {
      real(cfg.arm_inner, 0.0, 1e6, true, false, "(0, 1e6]");
    } else if (key == "arm_ratios") {
      list(cfg.arm_ratios, 1.0, true, "values must exceed 1");
    } else if (key == "arm_spacing") {
      real(cfg.arm_spacing, 0.0, 1e6, true, false, "(0, 1e6]");
    } else if (key == "ball_radius") {
      real(cfg.ball_radius, 0.0, 1.0, true, false, "(0, 1]");
    } else if (key == "workers") {
      integer(cfg.workers, 1, 1024);
    } else if (key == "out_dir") {
      if (value.empty())
        error(line_no, key, "must not be empty");
      else
        cfg.out_dir = std::string(value);
    } else {
      error(line_no, key, "unknown key");
    }
  }
  for (const char* required : {"kappa", "grid", "delta", "seed"})
    if (!seen.contains(required)) error(0, required, "missing required key");

  if (out.errors.empty()) out.config = std::move(cfg);
  return out;
}

/// Canonical text form. With `runtime` false the output omits workers and out_dir, which do
/// not affect results; that form feeds config_hash.
inline std::string serialize_config(const ExperimentConfig& c, bool runtime = true) {
  std::ostringstream os;
  os << "kappa = " << detail::format_real(c.kappa) << '\n'
     << "grid = " << c.width << 'x' << c.height << '\n'
     << "delta = " << detail::format_real(c.delta) << '\n'
     << "seed = " << c.seed << '\n'
     << "lmax = " << c.lmax << '\n'
     << "depth_limit = " << c.depth_limit << '\n'
     << "eps = " << detail::format_list(c.eps) << '\n'
     << "scales = " << detail::format_list(c.scales) << '\n'
     << "samples = " << c.samples << '\n'
     << "centers = " << c.centers << '\n'
     << "window_factor = " << detail::format_real(c.window_factor) << '\n'
     << "arm_inner = " << detail::format_real(c.arm_inner) << '\n'
     << "arm_ratios = " << detail::format_list(c.arm_ratios) << '\n'
     << "arm_spacing = " << detail::format_real(c.arm_spacing) << '\n'
     << "ball_radius = " << detail::format_real(c.ball_radius) << '\n';
  if (runtime) os << "workers = " << c.workers << '\n' << "out_dir = " << c.out_dir << '\n';
  return os.str();
}

/// 64-bit FNV-1a of the canonical serialisation without runtime knobs.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace cle
