#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "zk/diagnostics.hpp"
#include "zk/errors.hpp"
#include "zk/gmres.hpp"
#include "zk/soliton.hpp"

using namespace zk;

namespace {

// Solves are the expensive part; share them across cases.
const SolitonProfile& ground(int p, int n) {
  static std::map<std::pair<int, int>, SolitonProfile> cache;
  auto it = cache.find({p, n});
  if (it == cache.end()) it = cache.emplace(std::pair{p, n}, solve_ground_state(p, 1.0, GridSpec(n, n, 10, 10))).first;
  return it->second;
}

double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

Field flip(const Field& f, bool fx, bool fy) {
  Field out(f.grid);
  const int nx = f.grid.nx(), ny = f.grid.ny();
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) out(i, j) = f(fx ? (nx - i) % nx : i, fy ? (ny - j) % ny : j);
  return out;
}

Field scaled(const Field& f, double lambda) {
  Field out = f;
  for (double& v : out.values) v *= lambda;
  return out;
}

}  // namespace

TEST_CASE("gmres solves a small nonsymmetric system") {
  const int n = 40;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> A(n * n), b(n), x(n), xt(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A[i * n + j] = 0.1 * u(rng);
    A[i * n + i] += 3.0 + i * 0.1;
    xt[i] = u(rng);
  }
  for (int i = 0; i < n; ++i) {
    b[i] = 0.0;
    for (int j = 0; j < n; ++j) b[i] += A[i * n + j] * xt[j];
  }
  auto am = [&](std::span<const double> v, std::span<double> out) {
    for (int i = 0; i < n; ++i) {
      out[i] = 0.0;
      for (int j = 0; j < n; ++j) out[i] += A[i * n + j] * v[j];
    }
  };
  auto id = [](std::span<const double> v, std::span<double> out) { std::copy(v.begin(), v.end(), out.begin()); };
  GmresResult r = gmres(am, id, b, x, 1e-12, 10, 500);
  CHECK(r.converged);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(x[i] - xt[i]));
  CHECK(err < 1e-10);

  std::vector<double> zero(n, 0.0);
  r = gmres(am, id, zero, x, 1e-12, 10, 500);
  CHECK(r.converged);
  CHECK(x[5] == 0.0);
}

TEST_CASE("ground state peak values at 1024^2") {
  const double expected[] = {2.3920, 2.2062, 2.0853};
  for (int p = 2; p <= 4; ++p) {
    CAPTURE(p);
    const SolitonProfile& q = ground(p, 1024);
    CHECK(q.residual_sup < 1e-10);
    CHECK(ground_state_residual_sup(q.field, p, 1.0) < 1e-10);
    CHECK(std::abs(q.field(512, 512) - expected[p - 2]) < 5e-4);
    CHECK(std::abs(soliton_norms(q).sup - expected[p - 2]) < 5e-4);
  }
}

TEST_CASE("ground state is positive and even") {
  for (int p = 2; p <= 4; ++p) {
    CAPTURE(p);
    const SolitonProfile& q = ground(p, 256);
    CHECK(q.field(128, 128) > 0.0);
    CHECK(sup_diff(q.field, flip(q.field, true, false)) < 1e-8);
    CHECK(sup_diff(q.field, flip(q.field, false, true)) < 1e-8);
  }
}

TEST_CASE("Newton tail converges quadratically") {
  for (int p = 2; p <= 4; ++p) {
    CAPTURE(p);
    const auto& h = ground(p, 512).history;
    REQUIRE(h.size() >= 3);
    for (std::size_t k = 0; k + 1 < h.size(); ++k) {
      const double r0 = h[k].residual_sup, r1 = h[k + 1].residual_sup;
      // below ~1e-12 the residual is at rounding level
      if (r0 < 1e-4 && r1 > 1e-12) CHECK(r1 <= 10.0 * r0 * r0);
    }
  }
}

TEST_CASE("ground state is radially symmetric") {
  const SolitonProfile& q = ground(2, 512);
  SpectralField F = forward(q.field);
  for (double r : {0.3, 1.0, 1.7, 2.9, 4.4}) {
    CAPTURE(r);
    CHECK(std::abs(evaluate(F, r, 0.0) - evaluate(F, 0.0, r)) < 1e-7);
    CHECK(std::abs(evaluate(F, r / std::sqrt(2.0), r / std::sqrt(2.0)) - evaluate(F, r, 0.0)) < 1e-7);
  }
}

TEST_CASE("refinement from 256 to 512 agrees with the 512 solve") {
  const SolitonProfile& a = ground(2, 256);
  const SolitonProfile& b = ground(2, 512);
  Field ar = inverse(refine(forward(a.field), 2));
  CHECK(sup_diff(ar, b.field) < 1e-7);
}

TEST_CASE("rescaling") {
  const SolitonProfile& q = ground(2, 512);
  SolitonProfile same = rescale_soliton(q, 1.0);
  CHECK(sup_diff(same.field, q.field) == 0.0);

  SolitonProfile q4 = rescale_soliton(q, 4.0);
  CHECK(std::abs(q4.field(256, 256) - 4.0 * q.field(256, 256)) < 1e-6);
  CHECK(q4.c == 4.0);
  CHECK(q4.residual_sup < 1e-8);

  SolitonProfile q2 = rescale_soliton(q, 2.0);
  SolitonProfile direct = solve_ground_state(2, 2.0, q.field.grid);
  CHECK(sup_diff(q2.field, direct.field) < 1e-6);

  CHECK_THROWS_AS(rescale_soliton(q2, 1.0), ContractViolation);
  CHECK_THROWS_AS(rescale_soliton(ground(2, 256), 900.0), ResolutionError);
}

TEST_CASE("critical mass is invariant under rescaling") {
  const SolitonProfile& q = ground(3, 1024);
  const double m = mass(q.field);
  for (double c : {0.5, 2.0, 4.0}) {
    CAPTURE(c);
    CHECK(std::abs(mass(rescale_soliton(q, c).field) / m - 1.0) < 1e-9);
  }
}

TEST_CASE("regression constants at 1024^2") {
  // own high-resolution reference values
  const SolitonProfile& q2 = ground(2, 1024);
  CHECK(std::abs(soliton_norms(q2).mass - 31.00317265) < 1e-6);
  const SolitonProfile& q3 = ground(3, 1024);
  CHECK(std::abs(energy(q3.field, 3)) < 1e-8);
  const double m2 = mass(q2.field);
  CHECK(std::abs(mass(scaled(q2.field, 1.7)) - 1.7 * 1.7 * m2) < 1e-10 * m2);
}

TEST_CASE("ground state is a critical point of the action along lambda Q") {
  // d/dlambda [E(lambda Q) + c/2 M(lambda Q)] = 0 at lambda = 1
  for (int p = 2; p <= 4; ++p) {
    CAPTURE(p);
    const SolitonProfile& q = ground(p, 512);
    auto action = [&](double lam) {
      Field f = scaled(q.field, lam);
      return energy(f, p) + 0.5 * q.c * mass(f);
    };
    const double h = 1e-4;
    const double d = (action(1 + h) - action(1 - h)) / (2 * h);
    CHECK(std::abs(d) < 1e-6 * mass(q.field));
    // plain energy is not stationary: dE = -c M
    const double de = (energy(scaled(q.field, 1 + h), p) - energy(scaled(q.field, 1 - h), p)) / (2 * h);
    CHECK(de == doctest::Approx(-q.c * mass(q.field)).epsilon(1e-6));
  }
}

TEST_CASE("solver errors") {
  GridSpec g(128, 128, 10, 10);
  CHECK_THROWS_AS(solve_ground_state(5, 1.0, g), ContractViolation);
  CHECK_THROWS_AS(solve_ground_state(2, 0.0, g), ContractViolation);

  NewtonOptions few;
  few.max_iterations = 2;
  try {
    solve_ground_state(2, 1.0, g, few);
    FAIL("expected iteration failure");
  } catch (const IterationFailure& e) {
    CHECK(e.last_residual() > 1e-10);
  }

  // a start far from any ground state decays to zero
  NewtonOptions tiny;
  tiny.initial = sample(g, [](double x, double y) { return 0.1 * std::exp(-x * x - y * y); });
  CHECK_THROWS_AS(solve_ground_state(2, 1.0, g, tiny), IterationFailure);

  NewtonOptions starved;
  starved.gmres_restart = 1;
  starved.gmres_max_iterations = 1;
  starved.initial = sample(g, [](double x, double y) { return 2.0 * std::exp(-0.05 * (x * x + y * y)); });
  CHECK_THROWS_AS(solve_ground_state(2, 1.0, g, starved), Error);
}
