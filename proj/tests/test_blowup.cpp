#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "zk/blowup.hpp"
#include "zk/errors.hpp"

using namespace zk;

namespace {

struct Series {
  std::vector<double> t, g;
};

// g = e^b (t* - t)^a sampled uniformly on [t0, t1]
Series synthetic(double a, double b, double ts, double t0, double t1, int n) {
  Series s;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + (t1 - t0) * k / (n - 1);
    s.t.push_back(t);
    s.g.push_back(std::exp(b) * std::pow(ts - t, a));
  }
  return s;
}

const SolitonProfile& q2(int n = 256) {
  static SolitonProfile q256 = solve_ground_state(2, 1.0, GridSpec(256, 256, 10, 10));
  static SolitonProfile q512 = solve_ground_state(2, 1.0, GridSpec(512, 512, 10, 10));
  return n == 256 ? q256 : q512;
}

double sup_abs(const Field& f) {
  double m = 0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("fit recovers a noiseless power law") {
  const auto s = synthetic(-0.48, 1.4, 0.56, 0.3, 0.555, 500);
  for (FitMethod m : {FitMethod::profiled, FitMethod::simplex}) {
    const FitResult r = fit_power_law(s.t, s.g, 500, m, "sup_u");
    CHECK(std::abs(r.a + 0.48) < 1e-6);
    CHECK(std::abs(r.b - 1.4) < 1e-6);
    CHECK(std::abs(r.t_star - 0.56) < 1e-6);
    CHECK(r.t_star > s.t.back());
    CHECK(r.count == 500);
    CHECK(r.first == 0);
    CHECK(std::isfinite(r.rms_residual));
  }
}

TEST_CASE("fit uses the trailing window") {
  // early part follows a different law; only the last 300 samples count
  auto s = synthetic(-0.3, 0.2, 1.0, 0.0, 0.95, 800);
  for (int k = 0; k < 500; ++k) s.g[k] *= 1.0 + 0.5 * std::sin(double(k));
  const FitResult r = fit_power_law(s.t, s.g, 300);
  CHECK(r.first == 500);
  CHECK(std::abs(r.a + 0.3) < 1e-6);
  CHECK(std::abs(r.t_star - 1.0) < 1e-6);
}

TEST_CASE("fit is stable under 1% noise") {
  auto s = synthetic(-0.5, 1.0, 2.0, 1.0, 1.98, 1000);
  std::mt19937 gen(7);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (double& v : s.g) v *= std::exp(noise(gen));
  const FitResult r = fit_power_law(s.t, s.g, 1000);
  CHECK(std::abs(r.a + 0.5) < 0.05);
  CHECK(std::abs(r.t_star - 2.0) < 0.01);
  CHECK(r.rms_residual == doctest::Approx(0.01).epsilon(0.2));
}

TEST_CASE("fit invariances") {
  const auto s = synthetic(-0.22, 0.7, 3.1, 2.0, 3.05, 500);
  const FitResult r0 = fit_power_law(s.t, s.g);

  SUBCASE("time shift") {
    std::vector<double> t2 = s.t;
    for (double& t : t2) t += 5.25;
    const FitResult r = fit_power_law(t2, s.g);
    CHECK(std::abs(r.a - r0.a) < 1e-8);
    CHECK(std::abs(r.b - r0.b) < 1e-8);
    CHECK(std::abs(r.t_star - r0.t_star - 5.25) < 1e-8);
  }
  SUBCASE("amplitude scale") {
    std::vector<double> g2 = s.g;
    for (double& g : g2) g *= 3.5;
    const FitResult r = fit_power_law(s.t, g2);
    CHECK(std::abs(r.a - r0.a) < 1e-8);
    CHECK(std::abs(r.t_star - r0.t_star) < 1e-8);
    CHECK(std::abs(r.b - r0.b - std::log(3.5)) < 1e-8);
  }
}

TEST_CASE("profiled and simplex agree") {
  const auto s = synthetic(-1.05, -0.3, 0.9, 0.1, 0.89, 700);
  const FitResult p = fit_power_law(s.t, s.g, 500, FitMethod::profiled);
  const FitResult q = fit_power_law(s.t, s.g, 500, FitMethod::simplex);
  CHECK(std::abs(p.a - q.a) < 1e-6);
  CHECK(std::abs(p.b - q.b) < 1e-6);
  CHECK(std::abs(p.t_star - q.t_star) < 1e-6);
}

TEST_CASE("fit errors") {
  auto s = synthetic(-0.5, 0.0, 1.0, 0.0, 0.9, 100);
  CHECK_THROWS_AS(fit_power_law(s.t, s.g, 101), ContractViolation);
  s.g[50] = 0.0;
  CHECK_THROWS_AS(fit_power_law(s.t, s.g, 100), DomainError);

  // decaying, not blowing up: the optimum runs to the bracket end
  Series d;
  for (int k = 0; k < 200; ++k) {
    d.t.push_back(0.01 * k);
    d.g.push_back(std::exp(-0.01 * k));
  }
  CHECK_THROWS_AS(fit_power_law(d.t, d.g, 200), NoBlowUp);
  CHECK_THROWS_AS(parse_fit_method("lm"), ConfigError);
}

TEST_CASE("window sweep and report") {
  const auto s = synthetic(-0.5, 1.0, 1.0, 0.0, 0.99, 600);
  const std::vector<std::size_t> w{250, 500, 1000};
  const auto fits = fit_windows(s.t, s.g, w);
  REQUIRE(fits.size() == 2);
  CHECK(fits[0].count == 250);
  CHECK(fits[1].count == 500);

  std::ostringstream rep, curve;
  write_fit_report(rep, fits[0]);
  CHECK(rep.str().find("t_star = ") != std::string::npos);
  CHECK(rep.str().find("method = profiled") != std::string::npos);
  write_fit_curve(curve, fits[0], s.t, s.g);
  std::istringstream in(curve.str());
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 250);
}

TEST_CASE("estimate_L") {
  TimeSeries ts;
  for (int k = 0; k < 5; ++k) {
    TimeSeries::Sample smp{};
    smp.t = k;
    smp.sup_u = 2.0;
    smp.x_m = 0.1 * k;
    ts.append(smp);
  }
  auto tr = estimate_L(ts, 3, 2.0);
  for (double L : tr.L) CHECK(L == doctest::Approx(1.0));
  CHECK(tr.xm[3] == doctest::Approx(0.3));
  tr = estimate_L(ts, 4, 8.0);
  CHECK(tr.L[0] == doctest::Approx(8.0));  // 4^{3/2}
}

TEST_CASE("extract_residual on Q itself") {
  const auto& q = q2();
  const auto r = extract_residual(q.field, q);
  CHECK(sup_abs(r.residual) < 1e-8);
  CHECK(std::abs(r.c_fit - 1.0) < 1e-10);
  CHECK(std::abs(r.xc) < 1e-10);
  CHECK(std::abs(r.yc) < 1e-10);
}

TEST_CASE("extract_residual on a rescaled shifted soliton") {
  const auto& q = q2(512);
  const SolitonProfile qc = rescale_soliton(q, 2.3);
  const Field f = inverse(translate(forward(qc.field), 1.2, -0.7));
  const auto r = extract_residual(f, q);
  CHECK(sup_abs(r.residual) < 1e-6);
  CHECK(std::abs(r.c_fit - 2.3) < 1e-6);
  CHECK(std::abs(r.xc - 1.2) < 1e-8);
  CHECK(std::abs(r.yc + 0.7) < 1e-8);

  const auto lv = residual_levels(r, 1.0, 5.0);
  CHECK(lv.core < 1e-6);
  CHECK(lv.ambient < 1e-6);
}

TEST_CASE("extract_residual resolution and contract errors") {
  const auto& q = q2();
  // an extremely narrow peak cannot be represented on this grid
  const Field spike = sample(q.field.grid, [](double x, double y) { return 400.0 * std::exp(-(x * x + y * y) / 0.02); });
  CHECK_THROWS_AS(extract_residual(spike, q), ResolutionError);
  SolitonProfile q15 = q;
  q15.c = 1.5;
  CHECK_THROWS_AS(extract_residual(q.field, q15), ContractViolation);
}
