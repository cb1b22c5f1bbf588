#pragma once

// Independent reference implementations and fixtures shared by the tests.
// Nothing here calls into the library's numerical code.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace testing_support {

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  auto e = white_noise(n, seed);
  double s = 0.0;
  for (auto& x : e) {
    s = phi * s + x;
    x = s;
  }
  return e;
}

// Direct moving-average fluctuation analysis by explicit loops.
struct DirectDma {
  std::vector<double> x, y;  // already-integrated series
  double theta = 0.0;

  static std::vector<double> cumulate(const std::vector<double>& r) {
    std::vector<double> out(r.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      acc += r[i];
      out[i] = acc;
    }
    return out;
  }

  // Mean of z over the window ending `back` points before t and extending `fwd` after.
  static double window_mean(const std::vector<double>& z, long t, long back, long fwd) {
    double sum = 0.0;
    for (long k = t - back; k <= t + fwd; ++k) sum += z[static_cast<std::size_t>(k)];
    return sum / static_cast<double>(back + fwd + 1);
  }

  std::vector<double> segment_values(long s) const {
    const long n = static_cast<long>(x.size());
    const long fwd = static_cast<long>(std::floor((s - 1) * theta + 1e-9));
    const long back = s - 1 - fwd;
    std::vector<double> fv;
    for (long v = 0; v < n / s; ++v) {
      const long lo = v * s, hi = v * s + s - 1;
      if (lo - back < 0 || hi + fwd > n - 1) continue;
      double acc = 0.0;
      for (long t = lo; t <= hi; ++t) {
        const double ex = x[t] - window_mean(x, t, back, fwd);
        const double ey = y[t] - window_mean(y, t, back, fwd);
        acc += std::fabs(ex) * std::fabs(ey);
      }
      fv.push_back(acc / static_cast<double>(s));
    }
    return fv;
  }

  double fluctuation(double q, long s) const {
    const auto fv = segment_values(s);
    const double n = static_cast<double>(fv.size());
    if (q == 0.0) {
      double acc = 0.0;
      for (double f : fv) acc += std::log(f);
      return std::exp(acc / (2.0 * n));
    }
    double acc = 0.0;
    for (double f : fv) acc += std::pow(f, q / 2.0);
    return std::pow(acc / n, 1.0 / q);
  }
};

// Q_cc straight from its definition, no shared partial sums.
inline double direct_qcc(const std::vector<double>& x, const std::vector<double>& y, std::size_t m) {
  const std::size_t n = x.size();
  double sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += x[k] * x[k];
    syy += y[k] * y[k];
  }
  double q = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    double num = 0.0;
    for (std::size_t k = i; k < n; ++k) num += x[k] * y[k - i];
    const double xi = num / std::sqrt(sxx * syy);
    q += xi * xi / static_cast<double>(n - i);
  }
  return static_cast<double>(n) * static_cast<double>(n) * q;
}

// Upper chi-square tail by numerical quadrature of the density.
inline double quadrature_chi2_sf(double c, int m) {
  const double k = 0.5 * m;
  const double log_norm = -k * std::log(2.0) - std::lgamma(k);
  boost::math::quadrature::exp_sinh<double> integrator;
  auto pdf = [&](double t) {
    const double u = c + t;
    return std::exp((k - 1.0) * std::log(u) - 0.5 * u + log_norm);
  };
  return integrator.integrate(pdf, 0.0, std::numeric_limits<double>::infinity());
}

// Critical value by bisection on the quadrature tail.
inline double quadrature_chi2_critical(int m, double level) {
  double lo = 0.0, hi = m + 20.0 * std::sqrt(2.0 * m) + 20.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (quadrature_chi2_sf(mid, m) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Polynomial least squares via the normal equations in long double.
inline std::vector<double> normal_equations_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                                                int degree) {
  const int p = degree + 1;
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<long double> pw(2 * p, 1.0L);
    for (int j = 1; j < 2 * p; ++j) pw[j] = pw[j - 1] * xs[i];
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) a[r][c] += pw[r + c];
      a[r][p] += pw[r] * ys[i];
    }
  }
  for (int col = 0; col < p; ++col) {
    int piv = col;
    for (int r = col + 1; r < p; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (int r = 0; r < p; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (int c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> coef(p);
  for (int r = 0; r < p; ++r) coef[r] = static_cast<double>(a[r][p] / a[r][r]);
  return coef;
}

inline double cascade_alpha(double q, double p) {
  const double a = std::pow(p, q), b = std::pow(1.0 - p, q);
  return -(a * std::log(p) + b * std::log(1.0 - p)) / ((a + b) * std::log(2.0));
}

// A scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mfxdma_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace testing_support
