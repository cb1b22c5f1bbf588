#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "mfxdma/dma.hpp"
#include "mfxdma/multifractal.hpp"
#include "mfxdma/synth.hpp"
#include "support.hpp"

using namespace mfxdma;
using Catch::Approx;
namespace ts = testing_support;

TEST_CASE("profile is the running sum", "[dma]") {
  CHECK(dma::profile(std::vector<double>{1, 1, 1}) == std::vector<double>{1, 2, 3});
  CHECK(dma::profile(std::vector<double>{0, 0, 0}) == std::vector<double>{0, 0, 0});
  CHECK(dma::profile(std::vector<double>{1, -1, 2}) == std::vector<double>{1, 0, 2});
}

TEST_CASE("q grid and scale grid", "[dma]") {
  const auto q = dma::make_q_grid(-5, 5, 0.25);
  REQUIRE(q.size() == 41);
  CHECK(q[20] == 0.0);
  CHECK(q[28] == 2.0);
  CHECK(q.front() == -5.0);
  CHECK(q.back() == 5.0);

  const auto s = dma::log_scale_grid(10, 316, 30);
  CHECK(s.front() == 10u);
  CHECK(s.back() == 316u);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
}

TEST_CASE("moving average hand values and window placement", "[dma]") {
  const std::vector<double> z{1, 2, 3, 4};
  const auto ma = dma::moving_average(z, 2, 0.0);
  CHECK(ma.first_valid == 1u);
  CHECK(ma.last_valid == 3u);
  CHECK(std::isnan(ma.values[0]));
  CHECK(ma.values[1] == 1.5);
  CHECK(ma.values[2] == 2.5);
  CHECK(ma.values[3] == 3.5);

  const auto centred = dma::window_for(5, 0.5);
  CHECK(centred.back == 2u);
  CHECK(centred.forward == 2u);
  const auto forward = dma::window_for(5, 1.0);
  CHECK(forward.back == 0u);
  CHECK(forward.forward == 4u);
}

TEST_CASE("moving average of window one and of a constant", "[dma]") {
  const auto z = ts::white_noise(30, 2);
  for (double theta : {0.0, 0.5, 1.0}) {
    const auto one = dma::moving_average(z, 1, theta);
    CHECK(one.valid_length() == z.size());
    for (std::size_t t = 0; t < z.size(); ++t) CHECK(one.values[t] == z[t]);

    const std::vector<double> c(30, 3.25);
    const auto flat = dma::moving_average(c, 7, theta);
    for (std::size_t t = flat.first_valid; t <= flat.last_valid; ++t) CHECK(flat.values[t] == Approx(3.25));
  }
  CHECK_THROWS_AS(dma::moving_average(z, 31, 0.0), ValidationError);
  CHECK_THROWS_AS(dma::moving_average(z, 3, 1.5), ValidationError);
}

TEST_CASE("backward moving average is causal", "[dma]") {
  auto z = ts::white_noise(200, 5);
  const auto before = dma::moving_average(z, 17, 0.0);
  for (std::size_t t = 120; t < z.size(); ++t) z[t] += 100.0;
  const auto after = dma::moving_average(z, 17, 0.0);
  for (std::size_t t = before.first_valid; t < 120; ++t) CHECK(after.values[t] == before.values[t]);
}

TEST_CASE("segment covariations match a brute-force evaluation", "[dma]") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> d(-9, 9);
  std::vector<double> rx(20), ry(20);
  for (auto& v : rx) v = d(rng);
  for (auto& v : ry) v = d(rng);
  const auto px = ts::DirectDma::cumulate(rx), py = ts::DirectDma::cumulate(ry);

  for (double theta : {0.0, 0.5, 1.0}) {
    ts::DirectDma ref{px, py, theta};
    const auto fv = dma::segment_fluctuations(px, py, 5, theta);
    const auto expect = ref.segment_values(5);
    REQUIRE(fv.size() == expect.size());
    for (std::size_t v = 0; v < fv.size(); ++v) CHECK(fv[v] == Approx(expect[v]).epsilon(1e-12));
  }
  // Backward window: only the first of the four segments lacks history.
  CHECK(dma::segment_fluctuations(px, py, 5, 0.0).size() == 3u);
}

TEST_CASE("x == y reduces to the single-series squared residual", "[dma]") {
  const auto z = dma::profile(ts::white_noise(120, 6));
  const auto fv = dma::segment_fluctuations(z, z, 8, 0.0);
  const auto ma = dma::moving_average(z, 8, 0.0);
  const auto starts = dma::segment_starts(z.size(), 8, ma);
  for (std::size_t v = 0; v < fv.size(); ++v) {
    double acc = 0.0;
    for (std::size_t k = starts[v]; k < starts[v] + 8; ++k) acc += (z[k] - ma.values[k]) * (z[k] - ma.values[k]);
    CHECK(fv[v] == Approx(acc / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("fluctuation_function special cases", "[dma]") {
  const std::vector<double> pair{1.0, 4.0};
  CHECK(dma::fluctuation_function(pair, 0.0) == Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(dma::fluctuation_function(pair, 2.0) == Approx(std::sqrt(2.5)).epsilon(1e-15));
  const std::vector<double> flat(7, 0.36);
  for (double q : {-5.0, -1.0, 0.0, 0.5, 2.0, 5.0}) CHECK(dma::fluctuation_function(flat, q) == Approx(0.6));

  const std::vector<double> with_zero{0.5, 0.0, 0.2};
  CHECK_THROWS_AS(dma::fluctuation_function(with_zero, -1.0, 12), DegenerateSegmentError);
  try {
    dma::fluctuation_function(with_zero, 0.0, 12);
    FAIL("expected a degenerate segment error");
  } catch (const DegenerateSegmentError& e) {
    CHECK(e.segment() == 1u);
    CHECK(e.scale() == 12u);
  }
  CHECK(dma::fluctuation_function(with_zero, 2.0) > 0.0);
}

TEST_CASE("fluctuation_function survives extreme moments", "[dma]") {
  const std::vector<double> fv{1e-300, 1e-200, 1e-250};
  const double lo = dma::fluctuation_function(fv, -5.0);
  const double hi = dma::fluctuation_function(fv, 5.0);
  CHECK(std::isfinite(lo));
  CHECK(std::isfinite(hi));
  CHECK(lo < hi);
}

TEST_CASE("fluctuation function is non-decreasing in q", "[dma]") {
  const auto x = ts::white_noise(400, 31), y = ts::ar1(400, 0.4, 32);
  const auto fv = dma::segment_fluctuations(dma::profile(x), dma::profile(y), 10, 0.0);
  double prev = 0.0;
  for (double q : dma::make_q_grid(-5, 5, 0.25)) {
    const double f = dma::fluctuation_function(fv, q);
    CHECK(f >= prev * (1.0 - 1e-12));
    prev = f;
  }
}

TEST_CASE("hurst_curve on synthetic power-law surfaces", "[dma]") {
  dma::FluctuationSurface surf;
  surf.scales = dma::log_scale_grid(10, 316, 30);
  surf.q_grid = dma::make_q_grid(-2, 2, 1);
  surf.values.resize(surf.q_grid.size() * surf.scales.size());
  for (std::size_t iq = 0; iq < surf.q_grid.size(); ++iq)
    for (std::size_t is = 0; is < surf.scales.size(); ++is)
      surf.at(iq, is) = (iq == 0 ? 2.0 * std::pow(surf.scales[is], 0.5) : std::pow(surf.scales[is], 0.7));
  const auto hc = dma::hurst_curve(surf);
  CHECK(hc.h[0] == Approx(0.5).margin(1e-10));
  for (std::size_t iq = 1; iq < hc.h.size(); ++iq) {
    CHECK(hc.h[iq] == Approx(0.7).margin(1e-10));
    CHECK(hc.r2[iq] == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("fluctuation surface matches the direct evaluation", "[dma]") {
  const auto rx = ts::white_noise(64, 101), ry = ts::ar1(64, 0.6, 102);
  dma::DmaConfig cfg;
  cfg.scale_min = 8;
  cfg.scale_max = 16;
  cfg.n_scales = 4;
  cfg.q_grid = {-2.0, 0.0, 2.0};
  const auto surf = dma::fluctuation_surface(rx, ry, cfg);
  const ts::DirectDma ref{ts::DirectDma::cumulate(rx), ts::DirectDma::cumulate(ry), 0.0};
  for (std::size_t is = 0; is < surf.scales.size(); ++is)
    for (std::size_t iq = 0; iq < 3; ++iq)
      CHECK(surf.at(iq, is) == Approx(ref.fluctuation(cfg.q_grid[iq], static_cast<long>(surf.scales[is]))).epsilon(1e-10));
}

TEST_CASE("DmaConfig validation", "[dma]") {
  dma::DmaConfig cfg;
  CHECK_NOTHROW(cfg.validate(6065));
  CHECK_THROWS_AS(cfg.validate(1000), ValidationError);  // 316 > 1000/4
  cfg.q_grid = dma::make_q_grid(-5, 5, 0.3);              // misses 0 and 2
  CHECK_THROWS_AS(cfg.validate(6065), ValidationError);
  cfg = {};
  cfg.theta = -0.1;
  CHECK_THROWS_AS(cfg.validate(6065), ValidationError);
  cfg = {};
  cfg.n_scales = 3;
  CHECK_THROWS_AS(cfg.validate(6065), ValidationError);
}

TEST_CASE("surface CSV has one row per (q, s)", "[dma]") {
  const auto x = ts::white_noise(200, 3);
  dma::DmaConfig cfg;
  cfg.scale_max = 50;
  cfg.n_scales = 5;
  cfg.q_grid = {-1, 0, 1, 2};
  const auto surf = dma::fluctuation_surface(x, x, cfg);
  std::ostringstream out;
  dma::write_csv(out, surf);
  const auto text = out.str();
  CHECK(text.starts_with("q,s,F\n"));
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) ==
        1 + surf.q_grid.size() * surf.scales.size());
}

// ---------------------------------------------------------------------------

TEST_CASE("mass exponents and forced points", "[multifractal]") {
  const std::vector<double> q{-1, 0, 1, 2}, h{0.7, 0.6, 0.55, 0.5};
  const auto tau = mf::mass_exponents(q, h);
  CHECK(tau[1] == -1.0);
  CHECK(tau[3] == 0.0);
  const std::vector<double> hc(4, 0.3668);
  const auto lin = mf::mass_exponents(q, hc);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(lin[i] == Approx(-1.0 + 0.3668 * q[i]));
}

TEST_CASE("singularity strength on monofractal and quadratic tau", "[multifractal]") {
  const auto q = dma::make_q_grid(-5, 5, 0.25);
  std::vector<double> mono, quad;
  for (double v : q) {
    mono.push_back(0.5 * v - 1.0);
    quad.push_back(-1.0 + 0.4 * v - 0.01 * v * v);
  }
  for (double a : mf::singularity_strength(q, mono)) CHECK(a == Approx(0.5).margin(1e-12));
  const auto alpha = mf::singularity_strength(q, quad);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(alpha[i] == Approx(0.4 - 0.02 * q[i]).margin(1e-12));

  const auto f = mf::spectrum(q, mf::singularity_strength(q, mono), mono);
  for (double v : f) CHECK(v == Approx(1.0).margin(1e-12));
  CHECK(mf::singularity_width(mf::singularity_strength(q, mono)) == Approx(0.0).margin(1e-12));
}

TEST_CASE("cascade alpha and f(alpha) from the analytic tau", "[multifractal]") {
  const auto q = dma::make_q_grid(-5, 5, 0.25);
  std::vector<double> tau;
  for (double v : q) tau.push_back(synth::analytic_cascade_tau(v, 0.3));
  const auto alpha = mf::singularity_strength(q, tau);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(alpha[i] == Approx(ts::cascade_alpha(q[i], 0.3)).margin(1e-3));
  const auto f = mf::spectrum(q, alpha, tau);
  CHECK(*std::max_element(f.begin(), f.end()) == Approx(1.0).margin(1e-6));
}

TEST_CASE("singularity width", "[multifractal]") {
  const std::vector<double> a{0.3, 0.5, 0.4};
  CHECK(mf::singularity_width(a) == Approx(0.2));
  CHECK_THROWS_AS(mf::singularity_strength(std::vector<double>{0, 1}, std::vector<double>{0, 1}), ValidationError);
}

TEST_CASE("tau nonlinearity test", "[multifractal]") {
  const auto q = dma::make_q_grid(-5, 5, 0.25);
  std::vector<double> lin, goi, maize;
  for (double v : q) {
    lin.push_back(-1.0 + 0.5 * v);
    goi.push_back(-1.0 + 0.3668 * v + 0.0013 * v * v);
    maize.push_back(-1.0 + 0.3359 * v - 0.0107 * v * v);
  }
  const auto r_lin = mf::tau_nonlinearity_test(q, lin);
  CHECK(r_lin.fit.coefficients[2] == Approx(0.0).margin(1e-10));
  CHECK_FALSE(r_lin.multifractal_flag);

  const auto r_goi = mf::tau_nonlinearity_test(q, goi);
  CHECK(r_goi.fit.coefficients[2] == Approx(0.0013).margin(1e-10));
  CHECK(r_goi.fit.t_pvalues[2] < 0.05);
  CHECK_FALSE(r_goi.multifractal_flag);

  const auto r_maize = mf::tau_nonlinearity_test(q, maize);
  CHECK(r_maize.fit.coefficients[2] == Approx(-0.0107).margin(1e-10));
  CHECK(r_maize.multifractal_flag);

  std::ostringstream out;
  mf::write_csv(out, r_maize);
  CHECK(out.str().starts_with("f_stat,f_pvalue,r_squared,a0,a0_se,a0_t,a0_p,a1,"));
}

TEST_CASE("mfxdma of white noise is near H = 0.5", "[multifractal]") {
  const auto x = ts::white_noise(6065, 12);
  const auto r = mf::mfdma(x, dma::DmaConfig{});
  const auto& q = r.spectrum.q_grid;
  const auto i2 = static_cast<std::size_t>(std::find(q.begin(), q.end(), 2.0) - q.begin());
  const auto i0 = static_cast<std::size_t>(std::find(q.begin(), q.end(), 0.0) - q.begin());
  CHECK(r.spectrum.h[i2] == Approx(0.5).margin(0.1));
  CHECK(r.spectrum.tau[i0] == -1.0);
  CHECK(r.spectrum.f_alpha[i0] == 1.0);
}

TEST_CASE("scaling exponents are invariant under rescaling", "[multifractal]") {
  auto x = ts::white_noise(3000, 44), y = ts::ar1(3000, 0.3, 45);
  dma::DmaConfig cfg;
  cfg.scale_max = 250;
  const auto base = mf::mfxdma(x, y, cfg);
  for (auto& v : x) v *= 37.0;
  for (auto& v : y) v *= 0.01;
  const auto scaled = mf::mfxdma(x, y, cfg);
  for (std::size_t i = 0; i < base.hurst.h.size(); ++i)
    CHECK(scaled.hurst.h[i] == Approx(base.hurst.h[i]).margin(1e-9));
}

TEST_CASE("spectrum CSV layout", "[multifractal]") {
  const auto x = ts::white_noise(1200, 4);
  dma::DmaConfig cfg;
  cfg.scale_max = 300;
  const auto r = mf::mfdma(x, cfg);
  std::ostringstream out;
  mf::write_csv(out, r.spectrum);
  CHECK(out.str().starts_with("q,H,tau,alpha,f\n-5,"));
}
