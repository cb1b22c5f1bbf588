#pragma once

// Moving-average detrending and bivariate fluctuation functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mfxdma/error.hpp"
#include "mfxdma/format.hpp"
#include "mfxdma/stats.hpp"

namespace mfxdma::dma {

/// Evenly stepped q grid from q_min to q_max inclusive. Points within 1e-9
/// steps of an integer multiple land exactly on it, so 0 and 2 are exact.
inline std::vector<double> make_q_grid(double q_min, double q_max, double q_step) {
  if (!(q_step > 0.0) || !(q_max > q_min)) throw ValidationError("q grid: need q_min < q_max and q_step > 0");
  const double span = (q_max - q_min) / q_step;
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    double q = q_min + static_cast<double>(i) * q_step;
    const double units = q / q_step;
    if (std::fabs(units - std::round(units)) < 1e-9) q = std::round(units) * q_step;
    const double whole = std::round(q);
    if (std::fabs(q - whole) < 1e-12) q = whole;
    grid[i] = q;
  }
  return grid;
}

/// Integer scales, log-spaced between scale_min and scale_max, deduplicated.
inline std::vector<std::size_t> log_scale_grid(std::size_t scale_min, std::size_t scale_max,
                                               std::size_t n_scales) {
  if (scale_min < 2 || scale_max <= scale_min || n_scales < 2)
    throw ValidationError("scale grid: need 2 <= scale_min < scale_max and n_scales >= 2");
  const double lo = std::log(static_cast<double>(scale_min));
  const double hi = std::log(static_cast<double>(scale_max));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_scales; ++i) {
    const double f = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_scales - 1);
    const auto s = static_cast<std::size_t>(std::llround(std::exp(f)));
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

struct DmaConfig {
  double theta = 0.0;
  std::size_t scale_min = 10;
  std::size_t scale_max = 316;  // round(10^2.5)
  std::size_t n_scales = 30;
  std::vector<double> q_grid = make_q_grid(-5.0, 5.0, 0.25);
  bool use_profile = true;

  std::vector<std::size_t> scales() const { return log_scale_grid(scale_min, scale_max, n_scales); }

  /// Throws ValidationError unless the configuration suits a series of length n.
  void validate(std::size_t n) const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in [0,1]");
    if (scale_min < 2) throw ValidationError("scale_min must be >= 2");
    if (scale_max <= scale_min) throw ValidationError("scale_max must exceed scale_min");
    if (n_scales < 4) throw ValidationError("n_scales must be >= 4");
    if (scale_max > n / 4)
      throw ValidationError("scale_max " + std::to_string(scale_max) + " exceeds N/4 = " +
                            std::to_string(n / 4));
    if (scales().size() < 4) throw ValidationError("scale grid has fewer than 4 distinct scales");
    if (q_grid.size() < 3) throw ValidationError("q grid needs at least 3 points");
    for (std::size_t i = 1; i < q_grid.size(); ++i)
      if (!(q_grid[i] > q_grid[i - 1])) throw ValidationError("q grid must be strictly increasing");
    const auto has = [&](double v) { return std::find(q_grid.begin(), q_grid.end(), v) != q_grid.end(); };
    if (!has(0.0) || !has(2.0)) throw ValidationError("q grid must contain 0 and 2");
  }
};

/// Cumulative sum.
inline std::vector<double> profile(std::span<const double> values) {
  if (values.empty()) throw ValidationError("profile: empty input");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    acc += values[t];
    out[t] = acc;
  }
  return out;
}

/// Window extent for position parameter theta: the average at t covers
/// z(t - back) .. z(t + forward), back + forward + 1 == s.
struct Window {
  std::size_t back;
  std::size_t forward;
};

inline Window window_for(std::size_t s, double theta) {
  const double span = static_cast<double>(s - 1);
  const auto forward = static_cast<std::size_t>(std::floor(span * theta + 1e-9));
  return {s - 1 - forward, forward};
}

/// Moving average with validity range [first_valid, last_valid] (0-based,
/// inclusive). Entries outside the range are NaN.
struct MovingAverage {
  std::vector<double> values;
  std::size_t first_valid = 0;
  std::size_t last_valid = 0;

  bool valid(std::size_t t) const noexcept { return t >= first_valid && t <= last_valid; }
  std::size_t valid_length() const noexcept { return last_valid - first_valid + 1; }
};

inline MovingAverage moving_average(std::span<const double> z, std::size_t s, double theta) {
  const std::size_t n = z.size();
  if (s < 1) throw ValidationError("moving_average: window must be >= 1");
  if (s > n) throw ValidationError("moving_average: window " + std::to_string(s) +
                                   " exceeds series length " + std::to_string(n));
  if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("moving_average: theta must lie in [0,1]");
  const auto w = window_for(s, theta);

  // Extended-precision prefix sums keep window differences exact to double
  // round-off even on long profiles.
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<long double>(z[i]);

  MovingAverage ma;
  ma.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  ma.first_valid = w.back;
  ma.last_valid = n - 1 - w.forward;
  const long double inv_s = 1.0L / static_cast<long double>(s);
  for (std::size_t t = ma.first_valid; t <= ma.last_valid; ++t)
    ma.values[t] = static_cast<double>((prefix[t + w.forward + 1] - prefix[t - w.back]) * inv_s);
  return ma;
}

/// Start indices of the segments used at scale s: the int[N/s] segments
/// [v s, (v+1) s) of the series, minus any that reach outside the valid
/// moving-average range. For theta = 0 only the first segment is dropped.
inline std::vector<std::size_t> segment_starts(std::size_t n, std::size_t s, const MovingAverage& ma) {
  std::vector<std::size_t> starts;
  for (std::size_t v = 0; v < n / s; ++v) {
    const std::size_t start = v * s;
    if (start >= ma.first_valid && start + s - 1 <= ma.last_valid) starts.push_back(start);
  }
  return starts;
}

/// Per-segment covariation F_v(s) = (1/s) sum |eps_x| |eps_y| of the
/// moving-average residuals; a trailing remainder shorter than s is discarded.
inline std::vector<double> segment_fluctuations(std::span<const double> x, std::span<const double> y,
                                                std::size_t s, double theta) {
  if (x.size() != y.size()) throw ValidationError("segment_fluctuations: series lengths differ");
  const auto mx = moving_average(x, s, theta);
  const auto my = moving_average(y, s, theta);
  const auto starts = segment_starts(x.size(), s, mx);
  if (starts.empty())
    throw ValidationError("segment_fluctuations: no complete segment of size " + std::to_string(s));

  std::vector<double> fv(starts.size());
  for (std::size_t v = 0; v < starts.size(); ++v) {
    double acc = 0.0;
    for (std::size_t k = starts[v]; k < starts[v] + s; ++k)
      acc += std::fabs(x[k] - mx.values[k]) * std::fabs(y[k] - my.values[k]);
    fv[v] = acc / static_cast<double>(s);
  }
  return fv;
}

/// q-th order fluctuation function over segment covariations. Evaluated in
/// log space: q != 0 gives [mean F_v^{q/2}]^{1/q}, q == 0 the geometric branch
/// exp(mean ln F_v / 2).
inline double fluctuation_function(std::span<const double> fvs, double q, std::size_t scale = 0) {
  if (fvs.empty()) throw ValidationError("fluctuation_function: no segments");
  const auto n = static_cast<double>(fvs.size());
  if (q <= 0.0) {
    for (std::size_t v = 0; v < fvs.size(); ++v)
      if (!(fvs[v] > 0.0)) throw DegenerateSegmentError(v, scale, q);
  }
  if (q == 0.0) {
    double acc = 0.0;
    for (double f : fvs) acc += std::log(f);
    return std::exp(acc / (2.0 * n));
  }
  const double half_q = 0.5 * q;
  double peak = -std::numeric_limits<double>::infinity();
  for (double f : fvs) peak = std::max(peak, half_q * std::log(f));
  if (!std::isfinite(peak)) return 0.0;
  double acc = 0.0;
  for (double f : fvs) acc += std::exp(half_q * std::log(f) - peak);
  return std::exp((peak + std::log(acc / n)) / q);
}

/// F_xy(q, s) on a (q, s) grid; `values` is q-major.
struct FluctuationSurface {
  std::vector<std::size_t> scales;
  std::vector<double> q_grid;
  std::vector<double> values;

  double at(std::size_t iq, std::size_t is) const { return values[iq * scales.size() + is]; }
  double& at(std::size_t iq, std::size_t is) { return values[iq * scales.size() + is]; }
};

inline FluctuationSurface fluctuation_surface(std::span<const double> x, std::span<const double> y,
                                              const DmaConfig& cfg) {
  if (x.size() != y.size()) throw ValidationError("fluctuation_surface: series lengths differ");
  cfg.validate(x.size());

  std::vector<double> px, py;
  std::span<const double> sx = x, sy = y;
  if (cfg.use_profile) {
    px = profile(x);
    py = profile(y);
    sx = px;
    sy = py;
  }

  FluctuationSurface surf;
  surf.scales = cfg.scales();
  surf.q_grid = cfg.q_grid;
  surf.values.assign(surf.q_grid.size() * surf.scales.size(), 0.0);
  for (std::size_t is = 0; is < surf.scales.size(); ++is) {
    const auto s = surf.scales[is];
    const auto fv = segment_fluctuations(sx, sy, s, cfg.theta);
    for (std::size_t iq = 0; iq < surf.q_grid.size(); ++iq)
      surf.at(iq, is) = fluctuation_function(fv, surf.q_grid[iq], s);
  }
  return surf;
}

struct HurstCurve {
  std::vector<double> q_grid;
  std::vector<double> h;
  std::vector<double> std_error;
  std::vector<double> r2;
};

/// Per-q least-squares slope of ln F(q, s) on ln s.
inline HurstCurve hurst_curve(const FluctuationSurface& surf) {
  const auto ns = surf.scales.size();
  if (ns < 4) throw ValidationError("hurst_curve: need at least 4 scales");
  std::vector<double> ls(ns), lf(ns);
  for (std::size_t is = 0; is < ns; ++is) ls[is] = std::log(static_cast<double>(surf.scales[is]));

  HurstCurve hc;
  hc.q_grid = surf.q_grid;
  for (std::size_t iq = 0; iq < surf.q_grid.size(); ++iq) {
    for (std::size_t is = 0; is < ns; ++is) {
      lf[is] = std::log(surf.at(iq, is));
      if (!std::isfinite(lf[is]))
        throw ValidationError("hurst_curve: non-finite log fluctuation at q = " +
                              fmt_double(surf.q_grid[iq]) + ", s = " + std::to_string(surf.scales[is]));
    }
    const auto fit = stats::linear_fit(ls, lf);
    hc.h.push_back(fit.slope);
    hc.std_error.push_back(fit.slope_std_error);
    hc.r2.push_back(fit.r_squared);
  }
  return hc;
}

/// Long-format `q,s,F` rows.
inline void write_csv(std::ostream& out, const FluctuationSurface& surf) {
  out << "q,s,F\n";
  for (std::size_t iq = 0; iq < surf.q_grid.size(); ++iq)
    for (std::size_t is = 0; is < surf.scales.size(); ++is)
      out << fmt_double(surf.q_grid[iq]) << ',' << surf.scales[is] << ','
          << fmt_double(surf.at(iq, is)) << '\n';
}

}  // namespace mfxdma::dma
