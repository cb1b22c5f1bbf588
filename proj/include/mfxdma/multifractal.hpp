#pragma once

// Joint mass exponents, singularity spectrum and the quadratic tau(q) test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "mfxdma/dma.hpp"
#include "mfxdma/error.hpp"
#include "mfxdma/format.hpp"
#include "mfxdma/stats.hpp"

namespace mfxdma::mf {

struct JointSpectrumResult {
  std::vector<double> q_grid;
  std::vector<double> h;
  std::vector<double> tau;
  std::vector<double> alpha;
  std::vector<double> f_alpha;
  double delta_alpha = 0.0;
};

struct TauNonlinearityReport {
  stats::PolyFitReport fit;
  double significance_level = 0.05;
  bool multifractal_flag = false;
};

/// tau(q) = q H(q) - 1.
inline std::vector<double> mass_exponents(std::span<const double> q_grid, std::span<const double> h) {
  if (q_grid.size() != h.size()) throw ValidationError("mass_exponents: length mismatch");
  std::vector<double> tau(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!std::isfinite(h[i])) throw ValidationError("mass_exponents: non-finite H");
    tau[i] = q_grid[i] * h[i] - 1.0;
  }
  return tau;
}

inline std::vector<double> mass_exponents(const dma::HurstCurve& hc) {
  return mass_exponents(hc.q_grid, hc.h);
}

/// d tau / d q from three-point Lagrange stencils: centred in the interior,
/// one-sided at both ends. Second order on any grid and exact on quadratics.
inline std::vector<double> singularity_strength(std::span<const double> q, std::span<const double> tau) {
  const auto n = q.size();
  if (tau.size() != n) throw ValidationError("singularity_strength: length mismatch");
  if (n < 3) throw ValidationError("singularity_strength: need at least 3 grid points");

  // Derivative at q[at] of the parabola through points i0 < i1 < i2.
  const auto stencil = [&](std::size_t i0, std::size_t i1, std::size_t i2, std::size_t at) {
    const double x0 = q[i0], x1 = q[i1], x2 = q[i2], x = q[at];
    const double d0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    const double d1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    const double d2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    return d0 * tau[i0] + d1 * tau[i1] + d2 * tau[i2];
  };

  std::vector<double> alpha(n);
  alpha[0] = stencil(0, 1, 2, 0);
  for (std::size_t i = 1; i + 1 < n; ++i) alpha[i] = stencil(i - 1, i, i + 1, i);
  alpha[n - 1] = stencil(n - 3, n - 2, n - 1, n - 1);
  return alpha;
}

/// f = q alpha - tau.
inline std::vector<double> spectrum(std::span<const double> q, std::span<const double> alpha,
                                    std::span<const double> tau) {
  if (alpha.size() != q.size() || tau.size() != q.size())
    throw ValidationError("spectrum: length mismatch");
  std::vector<double> f(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) f[i] = q[i] * alpha[i] - tau[i];
  return f;
}

/// max(alpha) - min(alpha).
inline double singularity_width(std::span<const double> alpha) {
  if (alpha.empty()) throw ValidationError("singularity_width: empty input");
  const auto [lo, hi] = std::minmax_element(alpha.begin(), alpha.end());
  return *hi - *lo;
}

inline JointSpectrumResult joint_spectrum(const dma::HurstCurve& hc) {
  JointSpectrumResult r;
  r.q_grid = hc.q_grid;
  r.h = hc.h;
  r.tau = mass_exponents(hc);
  r.alpha = singularity_strength(r.q_grid, r.tau);
  r.f_alpha = spectrum(r.q_grid, r.alpha, r.tau);
  r.delta_alpha = singularity_width(r.alpha);
  return r;
}

/// Quadratic fit tau = a0 + a1 q + a2 q^2; flags joint multifractality when
/// a2 is negative and significant at `level`.
inline TauNonlinearityReport tau_nonlinearity_test(std::span<const double> q, std::span<const double> tau,
                                                   double level = 0.05) {
  if (q.size() < 5) throw ValidationError("tau_nonlinearity_test: need at least 5 grid points");
  TauNonlinearityReport r;
  r.fit = stats::ols_polyfit(q, tau, 2);
  r.significance_level = level;
  r.multifractal_flag = r.fit.coefficients[2] < 0.0 && r.fit.t_pvalues[2] < level;
  return r;
}

/// Everything one MF-X-DMA pass produces.
struct MfxdmaResult {
  dma::FluctuationSurface surface;
  dma::HurstCurve hurst;
  JointSpectrumResult spectrum;
};

inline MfxdmaResult mfxdma(std::span<const double> x, std::span<const double> y, const dma::DmaConfig& cfg) {
  MfxdmaResult r;
  r.surface = dma::fluctuation_surface(x, y, cfg);
  r.hurst = dma::hurst_curve(r.surface);
  r.spectrum = joint_spectrum(r.hurst);
  return r;
}

/// Single-series MF-DMA: the bivariate analysis of x against itself.
inline MfxdmaResult mfdma(std::span<const double> x, const dma::DmaConfig& cfg) { return mfxdma(x, x, cfg); }

/// `q,H,tau,alpha,f` rows.
inline void write_csv(std::ostream& out, const JointSpectrumResult& r) {
  out << "q,H,tau,alpha,f\n";
  for (std::size_t i = 0; i < r.q_grid.size(); ++i)
    out << fmt_double(r.q_grid[i]) << ',' << fmt_double(r.h[i]) << ',' << fmt_double(r.tau[i]) << ','
        << fmt_double(r.alpha[i]) << ',' << fmt_double(r.f_alpha[i]) << '\n';
}

/// One row in the shape of a tau-regression table.
inline void write_csv(std::ostream& out, const TauNonlinearityReport& r) {
  out << "f_stat,f_pvalue,r_squared";
  for (int j = 0; j <= r.fit.degree(); ++j)
    out << ",a" << j << ",a" << j << "_se,a" << j << "_t,a" << j << "_p";
  out << ",significance_level,multifractal_flag\n";
  out << fmt_double(r.fit.f_stat) << ',' << fmt_double(r.fit.f_pvalue) << ',' << fmt_double(r.fit.r_squared);
  for (std::size_t j = 0; j < r.fit.coefficients.size(); ++j)
    out << ',' << fmt_double(r.fit.coefficients[j]) << ',' << fmt_double(r.fit.std_errors[j]) << ','
        << fmt_double(r.fit.t_stats[j]) << ',' << fmt_double(r.fit.t_pvalues[j]);
  out << ',' << fmt_double(r.significance_level) << ',' << (r.multifractal_flag ? "true" : "false") << '\n';
}

}  // namespace mfxdma::mf
