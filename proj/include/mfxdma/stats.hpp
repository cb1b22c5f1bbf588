#pragma once

// Cross-correlation significance (Q_cc), chi-square critical values and
// least-squares polynomial regression with t/F diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "mfxdma/error.hpp"
#include "mfxdma/format.hpp"
#include "mfxdma/series_io.hpp"

namespace mfxdma::stats {

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace detail {

// Series expansion of P(a, x); converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x); used for x >= a + 1.
inline double gamma_q_contfrac(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Acklam's rational approximation to the standard normal quantile (|err| < 1.2e-9).
inline double normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  if (p < lo) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - lo) return -normal_quantile(1 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ValidationError("gamma_p: requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_contfrac(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ValidationError("gamma_q: requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_contfrac(a, x);
}

/// Chi-square upper tail P[chi2_dof > c].
inline double chi2_sf(double c, double dof) { return c <= 0.0 ? 1.0 : gamma_q(0.5 * dof, 0.5 * c); }

inline double chi2_pdf(double c, double dof) {
  if (c <= 0.0) return 0.0;
  const double k = 0.5 * dof;
  return std::exp((k - 1.0) * std::log(c) - 0.5 * c - k * std::log(2.0) - std::lgamma(k));
}

/// Value c with P[chi2_m > c] = level. Newton on Q(m/2, c/2) from a
/// Wilson-Hilferty start, safeguarded by bisection on a bracketing interval.
inline double chi2_critical(int m, double level) {
  if (m < 1) throw ValidationError("chi2_critical: degrees of freedom must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("chi2_critical: level must lie in (0,1)");

  const double dof = m;
  const double z = detail::normal_quantile(1.0 - level);
  const double h = 2.0 / (9.0 * dof);
  double c = dof * std::pow(std::max(1.0 - h + z * std::sqrt(h), 1e-3), 3);

  // Bracket: sf is decreasing in c.
  double lo = 0.0, hi = std::max(c, 1.0);
  while (chi2_sf(hi, dof) > level) hi *= 2.0;
  if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double f = chi2_sf(c, dof) - level;
    if (f > 0.0) lo = c; else hi = c;
    const double pdf = chi2_pdf(c, dof);
    double next = pdf > 0.0 ? c + f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::fabs(next - c);
    c = next;
    if (step <= 1e-13 * c || hi - lo <= 1e-14 * c) break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Q_cc cross-correlation test
// ---------------------------------------------------------------------------

struct QccReport {
  std::vector<int> m_values;
  std::vector<double> qcc;
  std::vector<double> critical;
  double significance_level = 0.05;
  std::vector<bool> reject;

  std::size_t size() const noexcept { return m_values.size(); }
};

namespace detail {

inline double cross_norm(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("cross-correlation: series lengths differ");
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k] * x[k];
    sy += y[k] * y[k];
  }
  const double den = std::sqrt(sx * sy);
  if (!(den > 0.0)) throw ValidationError("cross-correlation: zero-variance input");
  return den;
}

inline double lagged_dot(std::span<const double> x, std::span<const double> y, std::size_t lag) {
  double s = 0.0;
  for (std::size_t k = lag; k < x.size(); ++k) s += x[k] * y[k - lag];
  return s;
}

}  // namespace detail

/// Normalized lag-`lag` cross-correlation sum_{k>lag} x_k y_{k-lag} / sqrt(sum x^2 sum y^2).
inline double cross_corr_coeff(std::span<const double> x, std::span<const double> y,
                               std::size_t lag) {
  const double den = detail::cross_norm(x, y);
  if (lag < 1 || lag >= x.size())
    throw ValidationError("cross-correlation: lag must satisfy 1 <= lag < N");
  return detail::lagged_dot(x, y, lag) / den;
}

/// Q_cc(m) for m = 1..m_max; entry m-1 holds Q_cc(m).
inline std::vector<double> qcc_curve(std::span<const double> x, std::span<const double> y,
                                     std::size_t m_max) {
  const double den = detail::cross_norm(x, y);
  const std::size_t n = x.size();
  if (m_max < 1 || m_max >= n)
    throw ValidationError("Q_cc: m must satisfy 1 <= m < N (m = " + std::to_string(m_max) +
                          ", N = " + std::to_string(n) + ")");
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  std::vector<double> out(m_max);
  double acc = 0.0;
  for (std::size_t i = 1; i <= m_max; ++i) {
    const double xi = detail::lagged_dot(x, y, i) / den;
    acc += xi * xi / static_cast<double>(n - i);
    out[i - 1] = n2 * acc;
  }
  return out;
}

/// Q_cc(m) = N^2 sum_{i=1..m} X_i^2 / (N - i).
inline double qcc_statistic(std::span<const double> x, std::span<const double> y, std::size_t m) {
  return qcc_curve(x, y, m).back();
}

/// Evaluates Q_cc(m) against chi2(m) critical values for every m in `m_range`.
inline QccReport qcc_test(const io::AlignedPair& pair, std::span<const int> m_range, double level) {
  if (m_range.empty()) throw ValidationError("Q_cc: empty m range");
  const int m_max = *std::max_element(m_range.begin(), m_range.end());
  const int m_min = *std::min_element(m_range.begin(), m_range.end());
  if (m_min < 1) throw ValidationError("Q_cc: m must be positive");
  const auto curve = qcc_curve(pair.x.values, pair.y.values, static_cast<std::size_t>(m_max));

  QccReport rep;
  rep.significance_level = level;
  for (int m : m_range) {
    const double q = curve[static_cast<std::size_t>(m - 1)];
    const double c = chi2_critical(m, level);
    rep.m_values.push_back(m);
    rep.qcc.push_back(q);
    rep.critical.push_back(c);
    rep.reject.push_back(q > c);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

struct PolyFitReport {
  std::vector<double> coefficients;  // a_0 .. a_d
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<double> t_pvalues;  // two-sided
  double f_stat = 0.0;
  double f_pvalue = 1.0;
  double r_squared = 0.0;
  std::size_t dof = 0;  // residual degrees of freedom

  int degree() const noexcept { return static_cast<int>(coefficients.size()) - 1; }
};

/// Ordinary least squares of ys on (1, x, ..., x^degree).
///
/// Solved by column-pivoted Householder QR. The residual variance is floored
/// at the round-off level of `ys`, so an exactly representable polynomial
/// yields finite standard errors and coefficients that are zero up to
/// round-off are not reported as significant.
inline PolyFitReport ols_polyfit(std::span<const double> xs, std::span<const double> ys, int degree) {
  if (degree < 1) throw ValidationError("ols_polyfit: degree must be >= 1");
  const auto n = xs.size();
  const auto p = static_cast<std::size_t>(degree) + 1;
  if (ys.size() != n) throw ValidationError("ols_polyfit: xs and ys differ in length");
  if (n < p + 1) throw ValidationError("ols_polyfit: need at least degree + 2 points");
  if (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>{}) == xs.end())
    throw ValidationError("ols_polyfit: rank-deficient design (all xs identical)");

  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pw = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      design(i, j) = pw;
      pw *= xs[i];
    }
    y(i) = ys[i];
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(p))
    throw ValidationError("ols_polyfit: rank-deficient design matrix");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - design * beta;

  const double sse = resid.squaredNorm();
  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  const std::size_t dof = n - p;
  const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * y.cwiseAbs().maxCoeff();
  const double sigma2 = std::max(sse / static_cast<double>(dof), noise_floor * noise_floor);

  // (X^T X)^{-1} = P R^{-1} R^{-T} P^T
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_perm = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  const Eigen::MatrixXd cov = perm * cov_perm * perm.transpose();

  PolyFitReport rep;
  rep.dof = dof;
  const boost::math::students_t tdist(static_cast<double>(dof));
  for (std::size_t j = 0; j < p; ++j) {
    const double se = std::sqrt(sigma2 * cov(j, j));
    const double t = beta(j) / se;
    rep.coefficients.push_back(beta(j));
    rep.std_errors.push_back(se);
    rep.t_stats.push_back(t);
    rep.t_pvalues.push_back(std::isfinite(t) ? 2.0 * boost::math::cdf(boost::math::complement(
                                                         tdist, std::fabs(t)))
                                             : 0.0);
  }

  rep.r_squared = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;
  const double df_model = static_cast<double>(p - 1);
  rep.f_stat = std::max(sst - sse, 0.0) / df_model / sigma2;
  if (std::isfinite(rep.f_stat)) {
    const boost::math::fisher_f fdist(df_model, static_cast<double>(dof));
    rep.f_pvalue = boost::math::cdf(boost::math::complement(fdist, rep.f_stat));
  } else {
    rep.f_pvalue = 0.0;
  }
  return rep;
}

/// Simple linear regression ys = a + b xs with slope standard error.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_std_error = 0.0;
  double r_squared = 0.0;
};

inline LineFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  const auto n = xs.size();
  if (ys.size() != n || n < 3) throw ValidationError("linear_fit: need >= 3 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw ValidationError("linear_fit: all xs identical");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(syy - f.slope * sxy, 0.0);
  f.slope_std_error = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void write_csv(std::ostream& out, const QccReport& r) {
  out << "m,qcc,critical,reject\n";
  for (std::size_t i = 0; i < r.size(); ++i)
    out << r.m_values[i] << ',' << fmt_double(r.qcc[i]) << ','
        << fmt_double(r.critical[i]) << ',' << (r.reject[i] ? "true" : "false") << '\n';
}

inline nlohmann::json to_json(const QccReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.size(); ++i)
    rows.push_back({{"m", r.m_values[i]},
                    {"qcc", r.qcc[i]},
                    {"critical", r.critical[i]},
                    {"reject", static_cast<bool>(r.reject[i])}});
  return {{"significance_level", r.significance_level}, {"rows", rows}};
}

}  // namespace mfxdma::stats
