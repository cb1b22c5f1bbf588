#pragma once

// Synthetic series with known scaling, used as oracles.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mfxdma/error.hpp"
#include "mfxdma/fft.hpp"
#include "mfxdma/series_io.hpp"

namespace mfxdma::synth {

/// Autocovariance of unit-variance fractional Gaussian noise at lag k.
inline double fgn_autocovariance(std::size_t k, double hurst) {
  const double h2 = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::fabs(kk - 1.0), h2));
}

namespace detail {

inline std::vector<double> fgn_cholesky(std::size_t n, double hurst, std::mt19937_64& rng) {
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cov(i, j) = fgn_autocovariance(i > j ? i - j : j - i, hurst);
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw Error("fgn: covariance matrix is not positive definite");
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i) z(i) = normal(rng);
  const Eigen::VectorXd x = llt.matrixL() * z;
  return {x.data(), x.data() + n};
}

}  // namespace detail

/// Fractional Gaussian noise by circulant embedding of the exact
/// autocovariance (embedding length 2n). Falls back to a Cholesky
/// factorisation for n <= 4096 if the embedding is not non-negative definite.
inline std::vector<double> fgn(std::size_t n, double hurst, std::uint64_t seed) {
  if (n < 16) throw ValidationError("fgn: n must be >= 16");
  if (!(hurst > 0.0 && hurst < 1.0)) throw ValidationError("fgn: hurst must lie in (0,1)");
  std::mt19937_64 rng(seed);

  const std::size_t m = 2 * n;
  fft::ComplexFft fft(m);
  auto buf = fft.data();
  for (std::size_t j = 0; j < m; ++j) buf[j] = fgn_autocovariance(j <= n ? j : m - j, hurst);
  fft.forward();
  std::vector<double> lambda(m);
  double peak = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    lambda[k] = buf[k].real();
    peak = std::max(peak, std::fabs(lambda[k]));
  }
  const bool embeddable = std::all_of(lambda.begin(), lambda.end(), [&](double l) { return l >= -1e-10 * peak; });
  if (!embeddable) {
    if (n <= 4096) return detail::fgn_cholesky(n, hurst, rng);
    throw Error("fgn: circulant embedding failed (negative eigenvalue) and n > 4096");
  }

  std::normal_distribution<double> normal;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = normal(rng);
    const double b = normal(rng);
    buf[k] = std::sqrt(std::max(lambda[k], 0.0) * inv_m) * std::complex<double>(a, b);
  }
  fft.forward();
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = buf[j].real();
  return out;
}

struct CascadeSpec {
  int levels = 16;
  double p = 0.3;
  std::uint64_t seed = 0;
  bool shuffle = false;  // seeded random left/right ordering at each split
};

/// Deterministic binomial multiplicative measure on 2^levels cells summing to 1.
inline std::vector<double> binomial_cascade(const CascadeSpec& spec) {
  if (spec.levels < 4 || spec.levels > 30) throw ValidationError("binomial_cascade: levels must lie in [4,30]");
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw ValidationError("binomial_cascade: p must lie in (0,1)");
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> cells{1.0};
  for (int level = 0; level < spec.levels; ++level) {
    std::vector<double> next(cells.size() * 2);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const bool flip = spec.shuffle && coin(rng);
      next[2 * i] = cells[i] * (flip ? 1.0 - spec.p : spec.p);
      next[2 * i + 1] = cells[i] * (flip ? spec.p : 1.0 - spec.p);
    }
    cells = std::move(next);
  }
  return cells;
}

/// Mass exponents of the binomial measure: -log2(p^q + (1-p)^q).
inline double analytic_cascade_tau(double q, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("analytic_cascade_tau: p must lie in (0,1)");
  return -std::log2(std::pow(p, q) + std::pow(1.0 - p, q));
}

/// Wraps a return-like series as a level series P(t) = exp(scale * cumsum),
/// P(0) = 1, on consecutive calendar days from 2000-01-01, so that log
/// returns of the result reproduce `scale * values`.
inline io::RawSeries as_level_series(std::span<const double> values, std::string label, double scale = 0.01) {
  using namespace std::chrono;
  io::RawSeries s{std::move(label), {}};
  s.observations.reserve(values.size() + 1);
  sys_days day = sys_days{year{2000} / January / 1};
  double log_level = 0.0;
  s.observations.push_back({year_month_day{day}, 1.0});
  for (double v : values) {
    day += days{1};
    log_level += scale * v;
    s.observations.push_back({year_month_day{day}, std::exp(log_level)});
  }
  return s;
}

}  // namespace mfxdma::synth
