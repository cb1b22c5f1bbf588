#pragma once

// End-to-end analysis runs: configuration, staged execution, report and
// plot-data emission.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfxdma/dma.hpp"
#include "mfxdma/error.hpp"
#include "mfxdma/format.hpp"
#include "mfxdma/multifractal.hpp"
#include "mfxdma/parallel.hpp"
#include "mfxdma/series_io.hpp"
#include "mfxdma/stats.hpp"
#include "mfxdma/surrogate.hpp"

namespace mfxdma::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string input_x;
  std::string input_y;
  std::string date_column = "date";
  std::string value_column = "value";
  double theta = 0.0;
  double q_min = -5.0;
  double q_max = 5.0;
  double q_step = 0.25;
  std::size_t scale_min = 10;
  std::size_t scale_max = 316;
  std::size_t n_scales = 30;
  std::size_t n_surrogates = 1000;
  std::vector<surrogate::Scheme> schemes{std::begin(surrogate::kAllSchemes), std::end(surrogate::kAllSchemes)};
  double significance_level = 0.05;
  double secondary_level = 0.10;
  std::size_t qcc_m_max = 1000;
  std::optional<std::uint64_t> master_seed;
  bool standardize = false;
  bool use_profile = true;
  int iaaft_max_iter = 1000;

  // Stage switches.
  bool run_qcc = true;
  bool run_spectrum = true;
  bool run_surrogates = true;

  // Runtime only; never affect results.
  std::string out_dir = "results";
  unsigned threads = 0;

  dma::DmaConfig dma_config() const {
    dma::DmaConfig c;
    c.theta = theta;
    c.scale_min = scale_min;
    c.scale_max = scale_max;
    c.n_scales = n_scales;
    c.q_grid = dma::make_q_grid(q_min, q_max, q_step);
    c.use_profile = use_profile;
    return c;
  }

  bool surrogate_stage_enabled() const { return run_surrogates && n_surrogates > 0 && !schemes.empty(); }

  /// Sets one field from its textual form. Keys mirror the field names.
  void set(std::string_view key, std::string_view value);

  /// Config echo: every result-affecting field.
  nlohmann::json to_json() const;
};

namespace detail {

template <class T>
T parse_value(std::string_view key, std::string_view text) {
  T out{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    throw ValidationError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ValidationError("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(text) + "'");
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline void RunConfig::set(std::string_view key, std::string_view raw) {
  using detail::parse_bool;
  using detail::parse_value;
  const auto value = detail::trim(raw);
  if (key == "input_x") input_x = value;
  else if (key == "input_y") input_y = value;
  else if (key == "date_column") date_column = value;
  else if (key == "value_column") value_column = value;
  else if (key == "theta") theta = parse_value<double>(key, value);
  else if (key == "q_min") q_min = parse_value<double>(key, value);
  else if (key == "q_max") q_max = parse_value<double>(key, value);
  else if (key == "q_step") q_step = parse_value<double>(key, value);
  else if (key == "scale_min") scale_min = parse_value<std::size_t>(key, value);
  else if (key == "scale_max") scale_max = parse_value<std::size_t>(key, value);
  else if (key == "n_scales") n_scales = parse_value<std::size_t>(key, value);
  else if (key == "n_surrogates") n_surrogates = parse_value<std::size_t>(key, value);
  else if (key == "significance_level") significance_level = parse_value<double>(key, value);
  else if (key == "qcc_m_max") qcc_m_max = parse_value<std::size_t>(key, value);
  else if (key == "master_seed") master_seed = parse_value<std::uint64_t>(key, value);
  else if (key == "standardize") standardize = parse_bool(key, value);
  else if (key == "use_profile") use_profile = parse_bool(key, value);
  else if (key == "iaaft_max_iter") iaaft_max_iter = parse_value<int>(key, value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "threads") threads = parse_value<unsigned>(key, value);
  else if (key == "schemes") {
    schemes.clear();
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = detail::trim(rest.substr(0, comma));
      if (!item.empty()) {
        const auto s = surrogate::parse_scheme(item);
        if (std::find(schemes.begin(), schemes.end(), s) == schemes.end()) schemes.push_back(s);
      }
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::sort(schemes.begin(), schemes.end());
  } else {
    throw ValidationError("unknown config key '" + std::string(key) + "'");
  }
}

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json schemes_json = nlohmann::json::array();
  for (auto s : schemes) schemes_json.push_back(std::string(surrogate::scheme_name(s)));
  return {{"input_x", input_x},
          {"input_y", input_y},
          {"date_column", date_column},
          {"value_column", value_column},
          {"theta", theta},
          {"q_min", q_min},
          {"q_max", q_max},
          {"q_step", q_step},
          {"scale_min", scale_min},
          {"scale_max", scale_max},
          {"n_scales", n_scales},
          {"n_surrogates", n_surrogates},
          {"schemes", schemes_json},
          {"significance_level", significance_level},
          {"secondary_level", secondary_level},
          {"qcc_m_max", qcc_m_max},
          {"master_seed", master_seed ? nlohmann::json(*master_seed) : nlohmann::json(nullptr)},
          {"standardize", standardize},
          {"use_profile", use_profile},
          {"iaaft_max_iter", iaaft_max_iter}};
}

/// Applies a config file on top of `cfg`: a JSON object when the first
/// non-blank character is '{', otherwise `key = value` lines ('#' comments).
inline void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view source = "<config>") {
  const auto body = detail::trim(text);
  if (body.starts_with('{')) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string(source) + ": invalid JSON: " + e.what());
    }
    for (const auto& [key, v] : j.items()) {
      std::string textual;
      if (v.is_string()) textual = v.get<std::string>();
      else if (v.is_array()) {
        for (const auto& item : v) {
          if (!textual.empty()) textual += ',';
          textual += item.is_string() ? item.get<std::string>() : item.dump();
        }
      } else textual = v.dump();
      cfg.set(key, textual);
    }
    return;
  }
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto l = detail::trim(std::string_view(line).substr(0, line.find('#')));
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(std::string(source) + ":" + std::to_string(lineno) + ": expected key = value");
    cfg.set(detail::trim(l.substr(0, eq)), detail::trim(l.substr(eq + 1)));
  }
}

inline void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path.string());
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct StageRecord {
  std::string name;
  std::string status;  // ok | failed | skipped
  std::string error;
  double seconds = 0.0;
};

struct AnalysisBundle {
  RunConfig config;
  std::string pair_label;
  io::AlignedPair pair;
  std::optional<stats::QccReport> qcc;
  std::optional<mf::MfxdmaResult> analysis;
  std::optional<mf::TauNonlinearityReport> tau_fit;
  std::vector<surrogate::SurrogateTestReport> surrogate_tests;
  std::vector<StageRecord> stages;
  std::size_t mfxdma_invocations = 0;
  std::string started_at;
  double wall_seconds = 0.0;
  unsigned threads = 1;

  bool any_failed() const {
    return std::any_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "failed"; });
  }
  const surrogate::SurrogateTestReport* surrogate_report(surrogate::Scheme s) const {
    for (const auto& r : surrogate_tests)
      if (r.scheme == s) return &r;
    return nullptr;
  }
};

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs one stage, recording its outcome; failures are contained.
template <class Fn>
void run_stage(AnalysisBundle& b, std::string name, bool enabled, std::string skip_reason, Fn&& fn) {
  StageRecord rec{std::move(name), "skipped", std::move(skip_reason), 0.0};
  if (enabled) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
      rec.status = "ok";
      rec.error.clear();
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::clog << "[mfxdma] stage " << rec.name << ": " << rec.status;
  if (rec.status != "skipped") {
    char buf[32];
    std::snprintf(buf, sizeof buf, " (%.3f s)", rec.seconds);
    std::clog << buf;
  }
  if (!rec.error.empty()) std::clog << " - " << rec.error;
  std::clog << '\n';
  b.stages.push_back(std::move(rec));
}

}  // namespace detail

/// Runs the enabled stages on an aligned pair, in order: Q_cc test, MF-X-DMA,
/// tau(q) regression, surrogate tests. A failing stage is recorded and its
/// dependants are skipped; independent stages still run.
inline AnalysisBundle run_analysis(const RunConfig& cfg, io::AlignedPair pair) {
  if (cfg.surrogate_stage_enabled() && !cfg.master_seed)
    throw ValidationError("a master seed is required for the surrogate stage");
  if (!(cfg.significance_level > 0.0 && cfg.significance_level < 1.0))
    throw ValidationError("significance_level must lie in (0,1)");
  const auto dma_cfg = cfg.dma_config();
  dma_cfg.validate(pair.size());

  const auto t0 = std::chrono::steady_clock::now();
  AnalysisBundle b;
  b.config = cfg;
  b.started_at = detail::utc_now();
  b.threads = cfg.threads ? cfg.threads : default_thread_count();
  if (cfg.standardize) {
    pair.x = io::standardize(std::move(pair.x));
    pair.y = io::standardize(std::move(pair.y));
  }
  b.pair_label = pair.x.label + "_vs_" + pair.y.label;
  b.pair = std::move(pair);

  detail::run_stage(b, "qcc", cfg.run_qcc, "disabled", [&] {
    const std::size_t m_max = std::min<std::size_t>(cfg.qcc_m_max, b.pair.size() - 1);
    std::vector<int> ms(m_max);
    for (std::size_t m = 1; m <= m_max; ++m) ms[m - 1] = static_cast<int>(m);
    b.qcc = stats::qcc_test(b.pair, ms, 0.05);
  });

  const bool need_spectrum = cfg.run_spectrum || cfg.surrogate_stage_enabled();
  detail::run_stage(b, "mfxdma", need_spectrum, "disabled", [&] {
    b.analysis = mf::mfxdma(b.pair.x.values, b.pair.y.values, dma_cfg);
    ++b.mfxdma_invocations;
  });

  detail::run_stage(b, "tau_fit", cfg.run_spectrum && b.analysis.has_value(),
                    cfg.run_spectrum ? "mfxdma stage unavailable" : "disabled", [&] {
                      const auto& sp = b.analysis->spectrum;
                      b.tau_fit = mf::tau_nonlinearity_test(sp.q_grid, sp.tau, cfg.significance_level);
                    });

  detail::run_stage(
      b, "surrogate", cfg.surrogate_stage_enabled() && b.analysis.has_value(),
      cfg.surrogate_stage_enabled() ? "mfxdma stage unavailable" : "disabled", [&] {
        const surrogate::SurrogateOptions opts{cfg.iaaft_max_iter, b.threads};
        for (auto scheme : cfg.schemes) {
          b.surrogate_tests.push_back(surrogate::intrinsic_test(b.pair, scheme, cfg.n_surrogates, *cfg.master_seed,
                                                                dma_cfg, opts, &b.analysis->spectrum));
          b.mfxdma_invocations += cfg.n_surrogates;
        }
      });

  b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return b;
}

/// Loads both inputs named in `cfg`, aligns them and runs the analysis.
inline AnalysisBundle run_analysis(const RunConfig& cfg) {
  if (cfg.input_x.empty() || cfg.input_y.empty()) throw ValidationError("both input_x and input_y are required");
  const auto a = io::load_csv(cfg.input_x, cfg.date_column, cfg.value_column);
  const auto b = io::load_csv(cfg.input_y, cfg.date_column, cfg.value_column);
  return run_analysis(cfg, io::align(a, b));
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

enum class Figure { Returns, Qcc, Fluctuation, Hurst, TauFit, Spectrum, WidthHistogram, TauDeviation };

inline constexpr Figure kAllFigures[] = {Figure::Returns,  Figure::Qcc,            Figure::Fluctuation,
                                         Figure::Hurst,    Figure::TauFit,         Figure::Spectrum,
                                         Figure::WidthHistogram, Figure::TauDeviation};

inline std::string_view figure_name(Figure f) {
  switch (f) {
    case Figure::Returns: return "returns";
    case Figure::Qcc: return "qcc";
    case Figure::Fluctuation: return "fluctuation";
    case Figure::Hurst: return "hurst";
    case Figure::TauFit: return "tau_fit";
    case Figure::Spectrum: return "spectrum";
    case Figure::WidthHistogram: return "width_histogram";
    case Figure::TauDeviation: return "tau_deviation";
  }
  return "?";
}

class FigureUnavailable : public Error {
 public:
  FigureUnavailable(Figure f, std::string_view stage)
      : Error("figure '" + std::string(figure_name(f)) + "' unavailable: stage '" + std::string(stage) +
              "' did not complete") {}
};

inline constexpr std::size_t kHistogramBins = 30;

/// Whether the stages a figure depends on completed.
inline bool figure_available(const AnalysisBundle& b, Figure f) {
  switch (f) {
    case Figure::Returns: return true;
    case Figure::Qcc: return b.qcc.has_value();
    case Figure::Fluctuation:
    case Figure::Hurst:
    case Figure::Spectrum: return b.analysis.has_value();
    case Figure::TauFit: return b.tau_fit.has_value() && b.analysis.has_value();
    case Figure::WidthHistogram:
    case Figure::TauDeviation: return b.analysis.has_value() && !b.surrogate_tests.empty();
  }
  return false;
}

namespace detail {

inline std::string_view figure_stage(Figure f) {
  switch (f) {
    case Figure::Qcc: return "qcc";
    case Figure::TauFit: return "tau_fit";
    case Figure::WidthHistogram:
    case Figure::TauDeviation: return "surrogate";
    default: return "mfxdma";
  }
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  return out;
}

inline void write_figure(const AnalysisBundle& b, Figure f, std::ostream& out) {
  using surrogate::scheme_tag;
  const auto& tests = b.surrogate_tests;
  switch (f) {
    case Figure::Returns: {
      out << "date,x,y\n";
      for (std::size_t i = 0; i < b.pair.size(); ++i)
        out << (i < b.pair.x.dates.size() ? io::format_date(b.pair.x.dates[i]) : std::to_string(i)) << ','
            << fmt_double(b.pair.x.values[i]) << ',' << fmt_double(b.pair.y.values[i]) << '\n';
      break;
    }
    case Figure::Qcc: {
      out << "m,qcc,critical\n";
      for (std::size_t i = 0; i < b.qcc->size(); ++i)
        out << b.qcc->m_values[i] << ',' << fmt_double(b.qcc->qcc[i]) << ',' << fmt_double(b.qcc->critical[i])
            << '\n';
      break;
    }
    case Figure::Fluctuation: dma::write_csv(out, b.analysis->surface); break;
    case Figure::Hurst: {
      const auto& sp = b.analysis->spectrum;
      out << "q,H_orig";
      for (const auto& t : tests) out << ",H_mean_" << scheme_tag(t.scheme) << ",H_std_" << scheme_tag(t.scheme);
      out << '\n';
      for (std::size_t i = 0; i < sp.q_grid.size(); ++i) {
        out << fmt_double(sp.q_grid[i]) << ',' << fmt_double(sp.h[i]);
        for (const auto& t : tests) out << ',' << fmt_double(t.h.mean[i]) << ',' << fmt_double(t.h.std[i]);
        out << '\n';
      }
      break;
    }
    case Figure::TauFit: {
      const auto& sp = b.analysis->spectrum;
      const auto& a = b.tau_fit->fit.coefficients;
      out << "q,tau,tau_fit\n";
      for (std::size_t i = 0; i < sp.q_grid.size(); ++i) {
        const double q = sp.q_grid[i];
        out << fmt_double(q) << ',' << fmt_double(sp.tau[i]) << ',' << fmt_double(a[0] + a[1] * q + a[2] * q * q)
            << '\n';
      }
      break;
    }
    case Figure::Spectrum: {
      const auto& sp = b.analysis->spectrum;
      out << "q,alpha_orig,f_orig";
      for (const auto& t : tests) {
        const auto tag = scheme_tag(t.scheme);
        out << ",alpha_mean_" << tag << ",alpha_std_" << tag << ",f_mean_" << tag << ",f_std_" << tag;
      }
      out << '\n';
      for (std::size_t i = 0; i < sp.q_grid.size(); ++i) {
        out << fmt_double(sp.q_grid[i]) << ',' << fmt_double(sp.alpha[i]) << ',' << fmt_double(sp.f_alpha[i]);
        for (const auto& t : tests)
          out << ',' << fmt_double(t.alpha.mean[i]) << ',' << fmt_double(t.alpha.std[i]) << ','
              << fmt_double(t.f_alpha.mean[i]) << ',' << fmt_double(t.f_alpha.std[i]);
        out << '\n';
      }
      break;
    }
    case Figure::WidthHistogram: {
      out << "scheme,bin,lower,upper,count,delta_alpha_original\n";
      for (const auto& t : tests) {
        const auto [lo_it, hi_it] = std::minmax_element(t.widths.begin(), t.widths.end());
        double lo = *lo_it, hi = *hi_it;
        if (!(hi > lo)) {
          const double pad = std::max(std::fabs(lo) * 1e-6, 1e-12);
          lo -= pad;
          hi += pad;
        }
        const double width = (hi - lo) / static_cast<double>(kHistogramBins);
        std::vector<std::size_t> counts(kHistogramBins, 0);
        for (double w : t.widths) {
          auto bin = static_cast<std::size_t>((w - lo) / width);
          counts[std::min(bin, kHistogramBins - 1)]++;
        }
        for (std::size_t k = 0; k < kHistogramBins; ++k)
          out << surrogate::scheme_name(t.scheme) << ',' << k << ',' << fmt_double(lo + width * k) << ','
              << fmt_double(lo + width * (k + 1)) << ',' << counts[k] << ',' << fmt_double(t.delta_alpha_original)
              << '\n';
      }
      break;
    }
    case Figure::TauDeviation: {
      const auto& sp = b.analysis->spectrum;
      out << "q";
      for (const auto& t : tests) out << ",dtau_" << scheme_tag(t.scheme);
      out << '\n';
      for (std::size_t i = 0; i < sp.q_grid.size(); ++i) {
        out << fmt_double(sp.q_grid[i]);
        for (const auto& t : tests) out << ',' << fmt_double(sp.tau[i] - t.tau.mean[i]);
        out << '\n';
      }
      break;
    }
  }
}

}  // namespace detail

/// Writes one `figdata/<name>.csv` per requested figure. With no explicit
/// request every available figure is written; an explicitly requested figure
/// whose stage did not complete raises FigureUnavailable.
inline std::vector<std::filesystem::path> emit_plot_data(const AnalysisBundle& b, const std::filesystem::path& out_dir,
                                                         std::span<const Figure> requested = {}) {
  std::vector<Figure> figures;
  if (requested.empty()) {
    for (Figure f : kAllFigures)
      if (figure_available(b, f)) figures.push_back(f);
  } else {
    for (Figure f : requested) {
      if (!figure_available(b, f)) throw FigureUnavailable(f, detail::figure_stage(f));
      figures.push_back(f);
    }
  }
  const auto dir = out_dir / "figdata";
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (Figure f : figures) {
    const auto path = dir / (std::string(figure_name(f)) + ".csv");
    auto out = detail::open_out(path);
    detail::write_figure(b, f, out);
    written.push_back(path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Result summary; contains nothing that varies between identical runs.
inline nlohmann::json summary_json(const AnalysisBundle& b) {
  nlohmann::json j;
  j["pair"] = b.pair_label;
  j["n"] = b.pair.size();
  j["mfxdma_invocations"] = b.mfxdma_invocations;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : b.stages) stages.push_back({{"name", s.name}, {"status", s.status}, {"error", s.error}});
  j["stages"] = stages;
  if (b.qcc) {
    const auto rejected = std::count(b.qcc->reject.begin(), b.qcc->reject.end(), true);
    j["qcc"] = {{"m_max", b.qcc->size()}, {"rejected", rejected}, {"significance_level", b.qcc->significance_level}};
  }
  if (b.analysis) {
    const auto& sp = b.analysis->spectrum;
    const auto [hlo, hhi] = std::minmax_element(sp.h.begin(), sp.h.end());
    j["spectrum"] = {{"delta_alpha", sp.delta_alpha}, {"h_min", *hlo}, {"h_max", *hhi}};
  }
  if (b.tau_fit) {
    j["tau_fit"] = {{"a2", b.tau_fit->fit.coefficients[2]},
                    {"a2_pvalue", b.tau_fit->fit.t_pvalues[2]},
                    {"multifractal", b.tau_fit->multifractal_flag}};
  }
  if (!b.surrogate_tests.empty()) {
    nlohmann::json tests = nlohmann::json::array();
    bool primary = false, secondary = false;
    for (const auto& t : b.surrogate_tests) {
      tests.push_back({{"scheme", surrogate::scheme_name(t.scheme)},
                       {"p_value", t.p_value},
                       {"n", t.n_surrogates},
                       {"excluded", t.excluded},
                       {"iaaft_iterations_mean", t.iaaft_iterations_mean},
                       {"iaaft_unconverged", t.iaaft_unconverged}});
      primary = primary || t.intrinsic_candidate(b.config.significance_level);
      secondary = secondary || t.intrinsic_candidate(b.config.secondary_level);
    }
    j["surrogate"] = {{"tests", tests},
                      {"intrinsic_candidate",
                       nlohmann::json::array({{{"level", b.config.significance_level}, {"candidate", primary}},
                                              {{"level", b.config.secondary_level}, {"candidate", secondary}}})}};
  }
  return j;
}

/// Config echo, seed and version, plus a `runtime` block holding every
/// wall-clock or machine-dependent field.
inline nlohmann::json provenance_json(const AnalysisBundle& b) {
  nlohmann::json stage_seconds = nlohmann::json::object();
  for (const auto& s : b.stages) stage_seconds[s.name] = s.seconds;
  return {{"tool", "mfxdma"},
          {"version", kVersion},
          {"master_seed", b.config.master_seed ? nlohmann::json(*b.config.master_seed) : nlohmann::json(nullptr)},
          {"config", b.config.to_json()},
          {"runtime",
           {{"started_at", b.started_at},
            {"wall_seconds", b.wall_seconds},
            {"stage_seconds", stage_seconds},
            {"threads", b.threads},
            {"out_dir", b.config.out_dir}}}};
}

inline std::filesystem::path pair_directory(const AnalysisBundle& b, const std::filesystem::path& root) {
  return root / b.pair_label;
}

/// Writes the fixed report layout into `dir` and returns the written paths.
inline std::vector<std::filesystem::path> write_bundle(const AnalysisBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto emit = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = dir / name;
    auto out = detail::open_out(path);
    body(out);
    written.push_back(path);
  };
  if (b.qcc) {
    emit("qcc.csv", [&](std::ostream& o) { stats::write_csv(o, *b.qcc); });
    emit("qcc.json", [&](std::ostream& o) { o << stats::to_json(*b.qcc).dump(2) << '\n'; });
  }
  if (b.analysis) emit("spectrum.csv", [&](std::ostream& o) { mf::write_csv(o, b.analysis->spectrum); });
  if (b.tau_fit) emit("tau_fit.csv", [&](std::ostream& o) { mf::write_csv(o, *b.tau_fit); });
  for (const auto& t : b.surrogate_tests)
    emit("surrogate_" + std::string(surrogate::scheme_name(t.scheme)) + ".csv", [&](std::ostream& o) {
      surrogate::write_csv_header(o);
      surrogate::write_csv_row(o, b.pair_label, t);
    });
  emit("summary.json", [&](std::ostream& o) { o << summary_json(b).dump(2) << '\n'; });
  emit("provenance.json", [&](std::ostream& o) { o << provenance_json(b).dump(2) << '\n'; });
  const auto figs = emit_plot_data(b, dir);
  written.insert(written.end(), figs.begin(), figs.end());
  return written;
}

}  // namespace mfxdma::pipeline
