#pragma once

// IAAFT surrogates and the surrogate test for intrinsic joint multifractality.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfxdma/dma.hpp"
#include "mfxdma/error.hpp"
#include "mfxdma/fft.hpp"
#include "mfxdma/format.hpp"
#include "mfxdma/multifractal.hpp"
#include "mfxdma/parallel.hpp"
#include "mfxdma/series_io.hpp"

namespace mfxdma::surrogate {

enum class Scheme { IaaftXOrigY, OrigXIaaftY, IaaftXIaaftY };

inline constexpr Scheme kAllSchemes[] = {Scheme::IaaftXOrigY, Scheme::OrigXIaaftY, Scheme::IaaftXIaaftY};

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::IaaftXOrigY: return "iaaft_x_orig_y";
    case Scheme::OrigXIaaftY: return "orig_x_iaaft_y";
    case Scheme::IaaftXIaaftY: return "iaaft_x_iaaft_y";
  }
  return "?";
}

/// Short tag used in column names: s1, s2, s3.
inline std::string scheme_tag(Scheme s) { return "s" + std::to_string(static_cast<int>(s) + 1); }

/// Accepts the long name, the tag (s1..s3) or the bare number (1..3).
inline Scheme parse_scheme(std::string_view text) {
  for (Scheme s : kAllSchemes)
    if (text == scheme_name(s) || text == scheme_tag(s) || text == scheme_tag(s).substr(1)) return s;
  throw ValidationError("unknown surrogate scheme '" + std::string(text) + "'");
}

inline bool replaces_x(Scheme s) { return s != Scheme::OrigXIaaftY; }
inline bool replaces_y(Scheme s) { return s != Scheme::IaaftXOrigY; }

// ---------------------------------------------------------------------------
// IAAFT
// ---------------------------------------------------------------------------

struct IaaftResult {
  std::vector<double> values;
  int iterations = 0;
  bool converged = false;
};

/// Iterated amplitude-adjusted Fourier transform surrogate.
///
/// Starts from a seeded random shuffle, then alternates spectral substitution
/// (impose the original Fourier amplitudes, keep the current phases) with a
/// rank-order remap onto the sorted original values. Stops when the rank
/// order is unchanged between iterations or after `max_iter` iterations. The
/// output is always a permutation of the input.
inline IaaftResult iaaft(std::span<const double> series, int max_iter, std::uint64_t seed) {
  const std::size_t n = series.size();
  if (n < 8) throw ValidationError("iaaft: series length must be >= 8");
  if (max_iter < 1) throw ValidationError("iaaft: max_iter must be >= 1");
  for (double v : series)
    if (!std::isfinite(v)) throw ValidationError("iaaft: non-finite input");

  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());

  fft::RealFft fft(n);
  std::copy(series.begin(), series.end(), fft.real().begin());
  fft.forward();
  std::vector<double> amplitude(fft.spectrum_size());
  for (std::size_t k = 0; k < amplitude.size(); ++k) amplitude[k] = std::abs(fft.spectrum()[k]);

  IaaftResult out;
  out.values.assign(series.begin(), series.end());
  std::mt19937_64 rng(seed);
  std::shuffle(out.values.begin(), out.values.end(), rng);

  std::vector<std::size_t> rank(n), prev_rank;
  std::vector<double> filtered(n);
  for (int it = 1; it <= max_iter; ++it) {
    std::copy(out.values.begin(), out.values.end(), fft.real().begin());
    fft.forward();
    for (std::size_t k = 0; k < amplitude.size(); ++k) {
      auto& c = fft.spectrum()[k];
      const double mag = std::abs(c);
      c = mag > 0.0 ? c * (amplitude[k] / mag) : std::complex<double>(amplitude[k], 0.0);
    }
    fft.inverse();
    std::copy(fft.real().begin(), fft.real().end(), filtered.begin());

    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return filtered[a] < filtered[b]; });
    out.iterations = it;
    if (rank == prev_rank) {
      out.converged = true;
      break;
    }
    for (std::size_t j = 0; j < n; ++j) out.values[rank[j]] = sorted[j];
    prev_rank = rank;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

enum class Side : std::uint64_t { X = 0, Y = 1 };

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// IAAFT seed for ensemble member `k`, side x or y. Independent of scheme and
/// of evaluation order.
inline std::uint64_t member_seed(std::uint64_t master_seed, std::uint64_t k, Side side) {
  std::uint64_t h = detail::splitmix64(master_seed);
  h = detail::splitmix64(h ^ k);
  return detail::splitmix64(h ^ static_cast<std::uint64_t>(side));
}

/// Member `k` of the ensemble for `scheme`; original sides are copied untouched.
inline io::AlignedPair surrogate_member(const io::AlignedPair& pair, Scheme scheme, std::uint64_t k,
                                        std::uint64_t master_seed, int max_iter = 1000) {
  io::AlignedPair out = pair;
  if (replaces_x(scheme))
    out.x.values = iaaft(pair.x.values, max_iter, member_seed(master_seed, k, Side::X)).values;
  if (replaces_y(scheme))
    out.y.values = iaaft(pair.y.values, max_iter, member_seed(master_seed, k, Side::Y)).values;
  return out;
}

inline std::vector<io::AlignedPair> surrogate_ensemble(const io::AlignedPair& pair, Scheme scheme,
                                                       std::size_t n, std::uint64_t master_seed,
                                                       int max_iter = 1000, unsigned threads = 1) {
  if (n < 1) throw ValidationError("surrogate_ensemble: n must be >= 1");
  std::vector<io::AlignedPair> out(n);
  parallel_for(n, threads, [&](std::size_t k) { out[k] = surrogate_member(pair, scheme, k, master_seed, max_iter); });
  return out;
}

// ---------------------------------------------------------------------------
// Intrinsic multifractality test
// ---------------------------------------------------------------------------

/// Per-q mean and sample standard deviation across the valid members.
struct Band {
  std::vector<double> mean;
  std::vector<double> std;
};

struct SurrogateTestReport {
  Scheme scheme = Scheme::IaaftXIaaftY;
  double delta_alpha_original = 0.0;
  double mean_surrogate_width = 0.0;
  double std_surrogate_width = 0.0;
  double p_value = 1.0;
  std::size_t n_surrogates = 0;  // members that entered the statistics
  std::size_t excluded = 0;      // members dropped for degenerate segments
  std::uint64_t master_seed = 0;
  std::vector<double> widths;  // member order, valid members only
  std::vector<std::size_t> excluded_members;
  Band h, tau, alpha, f_alpha;
  double iaaft_iterations_mean = 0.0;
  std::size_t iaaft_unconverged = 0;

  std::size_t requested() const noexcept { return n_surrogates + excluded; }
  /// Original widths exceeding the surrogates: candidate for intrinsic joint multifractality.
  bool intrinsic_candidate(double level) const noexcept { return p_value < level; }
};

struct SurrogateOptions {
  int iaaft_max_iter = 1000;
  unsigned threads = 0;  // 0: default_thread_count()
};

namespace detail {

struct MemberOutcome {
  bool ok = false;
  mf::JointSpectrumResult spectrum;
  int iterations = 0;
  bool converged = true;
};

inline Band band_of(const std::vector<const std::vector<double>*>& rows, std::size_t width) {
  Band b;
  b.mean.assign(width, 0.0);
  b.std.assign(width, 0.0);
  const auto n = static_cast<double>(rows.size());
  if (rows.empty()) return b;
  for (const auto* r : rows)
    for (std::size_t i = 0; i < width; ++i) b.mean[i] += (*r)[i];
  for (double& m : b.mean) m /= n;
  if (rows.size() > 1) {
    for (const auto* r : rows)
      for (std::size_t i = 0; i < width; ++i) b.std[i] += ((*r)[i] - b.mean[i]) * ((*r)[i] - b.mean[i]);
    for (double& s : b.std) s = std::sqrt(s / (n - 1.0));
  }
  return b;
}

}  // namespace detail

/// Compares the original joint singularity width with the widths of `n`
/// surrogate pairs built per `scheme`. The p-value is the fraction of valid
/// members whose width exceeds the original. Members hitting a degenerate
/// segment are excluded and counted. Pass `original` to reuse an existing
/// analysis of the unmodified pair.
inline SurrogateTestReport intrinsic_test(const io::AlignedPair& pair, Scheme scheme, std::size_t n,
                                          std::uint64_t master_seed, const dma::DmaConfig& cfg,
                                          const SurrogateOptions& opts = {},
                                          const mf::JointSpectrumResult* original = nullptr) {
  if (n < 1) throw ValidationError("intrinsic_test: need at least one surrogate");
  cfg.validate(pair.size());

  mf::JointSpectrumResult own;
  if (!original) {
    own = mf::mfxdma(pair.x.values, pair.y.values, cfg).spectrum;
    original = &own;
  }

  std::vector<detail::MemberOutcome> members(n);
  const unsigned threads = opts.threads ? opts.threads : default_thread_count();
  parallel_for(n, threads, [&](std::size_t k) {
    auto& m = members[k];
    io::AlignedPair sp = pair;
    int iters = 0;
    bool conv = true;
    if (replaces_x(scheme)) {
      auto r = iaaft(pair.x.values, opts.iaaft_max_iter, member_seed(master_seed, k, Side::X));
      sp.x.values = std::move(r.values);
      iters += r.iterations;
      conv = conv && r.converged;
    }
    if (replaces_y(scheme)) {
      auto r = iaaft(pair.y.values, opts.iaaft_max_iter, member_seed(master_seed, k, Side::Y));
      sp.y.values = std::move(r.values);
      iters += r.iterations;
      conv = conv && r.converged;
    }
    m.iterations = iters;
    m.converged = conv;
    try {
      m.spectrum = mf::mfxdma(sp.x.values, sp.y.values, cfg).spectrum;
      m.ok = true;
    } catch (const DegenerateSegmentError&) {
      m.ok = false;
    }
  });

  SurrogateTestReport rep;
  rep.scheme = scheme;
  rep.master_seed = master_seed;
  rep.delta_alpha_original = original->delta_alpha;
  std::vector<const std::vector<double>*> hs, taus, alphas, fs;
  double iter_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = members[k];
    iter_sum += m.iterations;
    if (!m.converged) ++rep.iaaft_unconverged;
    if (!m.ok) {
      rep.excluded_members.push_back(k);
      continue;
    }
    rep.widths.push_back(m.spectrum.delta_alpha);
    hs.push_back(&m.spectrum.h);
    taus.push_back(&m.spectrum.tau);
    alphas.push_back(&m.spectrum.alpha);
    fs.push_back(&m.spectrum.f_alpha);
  }
  rep.excluded = rep.excluded_members.size();
  rep.n_surrogates = rep.widths.size();
  rep.iaaft_iterations_mean = iter_sum / static_cast<double>(n);
  if (rep.n_surrogates == 0) throw Error("intrinsic_test: every surrogate member was degenerate");

  const auto q_count = original->q_grid.size();
  rep.h = detail::band_of(hs, q_count);
  rep.tau = detail::band_of(taus, q_count);
  rep.alpha = detail::band_of(alphas, q_count);
  rep.f_alpha = detail::band_of(fs, q_count);

  const auto valid = static_cast<double>(rep.n_surrogates);
  std::size_t wider = 0;
  double sum = 0.0;
  for (double w : rep.widths) {
    sum += w;
    if (w > rep.delta_alpha_original) ++wider;
  }
  rep.mean_surrogate_width = sum / valid;
  double ss = 0.0;
  for (double w : rep.widths) ss += (w - rep.mean_surrogate_width) * (w - rep.mean_surrogate_width);
  rep.std_surrogate_width = rep.n_surrogates > 1 ? std::sqrt(ss / (valid - 1.0)) : 0.0;
  rep.p_value = static_cast<double>(wider) / valid;
  return rep;
}

/// `pair,scheme,delta_alpha,mean_hat,std_hat,p_value,n,excluded`.
inline void write_csv_header(std::ostream& out) {
  out << "pair,scheme,delta_alpha,mean_hat,std_hat,p_value,n,excluded\n";
}

inline void write_csv_row(std::ostream& out, std::string_view pair_label, const SurrogateTestReport& r) {
  out << pair_label << ',' << scheme_name(r.scheme) << ',' << fmt_double(r.delta_alpha_original) << ','
      << fmt_double(r.mean_surrogate_width) << ',' << fmt_double(r.std_surrogate_width) << ','
      << fmt_double(r.p_value) << ',' << r.n_surrogates << ',' << r.excluded << '\n';
}

}  // namespace mfxdma::surrogate
