#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "zk/errors.hpp"
#include "zk/grid.hpp"

using namespace zk;
using std::numbers::pi;

namespace {

double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

double sup_abs(const Field& a) {
  double m = 0.0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  return m;
}

Field random_field(const GridSpec& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Field f(g);
  for (double& v : f.values) v = n(rng);
  return f;
}

// Smooth random trigonometric polynomial with a few low modes.
Field random_smooth(const GridSpec& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Mode { int a, b; double c, phi; };
  std::vector<Mode> modes;
  for (int m = 0; m < 6; ++m)
    modes.push_back({int(rng() % 5), int(rng() % 5) - 2, u(rng), pi * u(rng)});
  return sample(g, [&](double x, double y) {
    double s = 0.0;
    for (auto& m : modes) s += m.c * std::cos(m.a * x / g.lx() + m.b * y / g.ly() + m.phi);
    return s;
  });
}

}  // namespace

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS(GridSpec(6, 3, 1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(GridSpec(2, 8, 1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(GridSpec(8, 8, 0.0, 1.0), ContractViolation);
  GridSpec g(16, 8, 2.0, 1.0);
  CHECK(g.dx() == doctest::Approx(2 * pi * 2.0 / 16));
  CHECK(g.x(8) == doctest::Approx(0.0));
  CHECK(g.mode_x(8) == 8);
  CHECK(g.mode_x(9) == -7);
  CHECK(g.kx(1) == doctest::Approx(0.5));
}

TEST_CASE("forward of constant and single mode") {
  GridSpec g(16, 16, 3.0, 2.0);
  auto F = forward(sample(g, [](double, double) { return 1.0; }));
  CHECK(std::abs(F.coeff(0, 0) - 1.0) < 1e-15);
  double others = 0.0;
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy)
      if (ix || iy) others = std::max(others, std::abs(F.at(ix, iy)));
  CHECK(others < 1e-15);

  auto C = forward(sample(g, [&](double x, double) { return std::cos(x / g.lx()); }));
  CHECK(std::abs(C.coeff(1, 0) - 0.5) < 1e-15);
  CHECK(std::abs(C.coeff(-1, 0) - 0.5) < 1e-15);
  auto S = forward(sample(g, [&](double, double y) { return std::sin(2 * y / g.ly()); }));
  CHECK(std::abs(S.coeff(0, 2) - Complex(0, -0.5)) < 1e-15);
  CHECK(std::abs(S.coeff(0, -2) - Complex(0, 0.5)) < 1e-15);
}

TEST_CASE("round trip and conjugate symmetry of random fields") {
  for (unsigned seed : {1u, 2u, 3u}) {
    GridSpec g(32 + 16 * seed, 64, 1.0 + seed, 5.0);
    Field f = random_field(g, seed);
    auto F = forward(f);
    Field back = inverse(F);
    CHECK(sup_diff(f, back) / sup_abs(f) < 1e-13);
    auto full = F.full();
    double worst = 0.0, scale = 0.0;
    for (int ix = 0; ix < g.nx(); ++ix)
      for (int iy = 0; iy < g.ny(); ++iy) {
        const Complex a = full[std::size_t(ix) * g.ny() + iy];
        const Complex b = full[std::size_t((g.nx() - ix) % g.nx()) * g.ny() + (g.ny() - iy) % g.ny()];
        worst = std::max(worst, std::abs(a - std::conj(b)));
        scale = std::max(scale, std::abs(a));
      }
    CHECK(worst / scale < 1e-13);
  }
}

TEST_CASE("shape mismatch is a contract violation") {
  GridSpec g(8, 8, 1.0, 1.0);
  Field f(g);
  f.values.resize(10);
  CHECK_THROWS_AS(forward(f), ContractViolation);
}

TEST_CASE("spectral derivatives") {
  GridSpec g(32, 16, 1.0, 1.0);
  auto dsin = inverse(derivative(forward(sample(g, [](double x, double) { return std::sin(x); })), 1, 0));
  CHECK(sup_diff(dsin, sample(g, [](double x, double) { return std::cos(x); })) < 1e-12);

  auto dconst = inverse(derivative(forward(sample(g, [](double, double) { return 3.0; })), 2, 1));
  CHECK(sup_abs(dconst) < 1e-14);

  // Third derivative of exp(sin(x/2)) on lx = 2: closed form and a 4x finer grid.
  auto f = [](double x, double) { return std::exp(std::sin(x / 2)); };
  auto exact = [](double x, double) {
    const double s = std::sin(x / 2), c = std::cos(x / 2);
    return std::exp(s) * (c * c * c - 3 * s * c - c) / 8.0;
  };
  GridSpec coarse(32, 8, 2.0, 1.0), fine(128, 32, 2.0, 1.0);
  auto d3 = inverse(derivative(forward(sample(coarse, f)), 3, 0));
  CHECK(sup_diff(d3, sample(coarse, exact)) < 1e-10);
  auto d3f = inverse(derivative(forward(sample(fine, f)), 3, 0));
  double worst = 0.0;
  for (int i = 0; i < coarse.nx(); ++i)
    for (int j = 0; j < coarse.ny(); ++j) worst = std::max(worst, std::abs(d3(i, j) - d3f(4 * i, 4 * j)));
  CHECK(worst < 1e-10);
}

TEST_CASE("derivative composition and Nyquist convention") {
  GridSpec g(16, 12, 1.5, 0.7);
  auto F = forward(random_field(g, 7));
  auto twice = derivative(derivative(F, 1, 0), 1, 0);
  auto direct = derivative(F, 2, 0);
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) {
      if (ix == g.nx() / 2) {
        CHECK(twice.at(ix, iy) == Complex{});
      } else {
        CHECK(std::abs(twice.at(ix, iy) - direct.at(ix, iy)) <= 1e-15 * std::abs(direct.at(ix, iy)));
      }
    }
  // Odd-order Nyquist zeroing keeps the result a valid real field.
  auto dy = derivative(F, 0, 1);
  for (int ix = 0; ix < g.nx(); ++ix) CHECK(dy.at(ix, g.ny() / 2) == Complex{});
}

TEST_CASE("quadrature") {
  GridSpec g(64, 64, 10.0, 10.0);
  CHECK(quadrature(sample(g, [](double, double) { return 1.0; })) ==
        doctest::Approx(std::pow(20 * pi, 2)).epsilon(1e-14));
  CHECK(std::abs(quadrature(sample(g, [](double x, double) { return std::cos(x / 10.0); }))) < 1e-12);
  GridSpec gg(256, 256, 10.0, 10.0);
  const double gi = quadrature(sample(gg, [](double x, double y) { return std::exp(-2 * (x * x + y * y)); }));
  CHECK(std::abs(gi - pi / 2) < 1e-10);
}

TEST_CASE("Parseval property over random grids") {
  for (unsigned seed = 10; seed < 16; ++seed) {
    GridSpec g(8 + 2 * (seed % 5), 10 + 4 * (seed % 3), 0.5 + seed * 0.1, 2.0);
    Field f = random_field(g, seed);
    Field f2 = f;
    for (double& v : f2.values) v *= v;
    auto full = forward(f).full();
    double s = 0.0;
    for (auto c : full) s += std::norm(c);
    CHECK(quadrature(f2) == doctest::Approx(g.area() * s).epsilon(1e-12));
  }
}

TEST_CASE("refine interpolates and restrict inverts it") {
  GridSpec g(16, 16, 1.0, 2.0);
  auto one = inverse(refine(forward(sample(g, [](double, double) { return 2.5; })), 2));
  for (double v : one.values) CHECK(std::abs(v - 2.5) < 1e-14);

  auto c = inverse(refine(forward(sample(g, [](double x, double) { return std::cos(x); })), 2));
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) CHECK(std::abs(c(2 * i, 2 * j) - std::cos(g.x(i))) < 1e-12);

  for (unsigned seed : {3u, 4u}) {
    Field f = random_field(g, seed);
    auto F = forward(f);
    for (int factor : {2, 3}) {
      auto R = refine(F, factor);
      // Refined field stays real, interpolates the nodes, and restricts back exactly.
      Field r = inverse(R);
      double worst = 0.0;
      for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) worst = std::max(worst, std::abs(r(factor * i, factor * j) - f(i, j)));
      CHECK(worst < 1e-12);
      auto back = restrict_to(R, g);
      for (std::size_t k = 0; k < F.half.size(); ++k) CHECK(back.half[k] == F.half[k]);
    }
  }
}

TEST_CASE("tail indicator") {
  GridSpec g(64, 64, 1.0, 1.0);
  CHECK(tail_indicator(forward(sample(g, [](double x, double y) { return std::cos(3 * x) + std::sin(y); }))) < 1e-15);
  CHECK(tail_indicator(forward(random_field(g, 5))) > 0.3);
  auto F = forward(random_field(g, 6));
  two_thirds_filter(F);
  CHECK(tail_indicator(F) == 0.0);
}

TEST_CASE("translation is exact for band-limited fields") {
  GridSpec g(32, 32, 1.0, 1.0);
  Field f = random_smooth(g, 9);
  const double sx = 0.37, sy = -1.1;
  Field moved = inverse(translate(forward(f), sx, sy));
  Field expect = inverse(forward(f));
  // Compare against direct evaluation of the shifted interpolant.
  auto F = forward(f);
  double worst = 0.0;
  for (int i = 0; i < g.nx(); i += 3)
    for (int j = 0; j < g.ny(); j += 5)
      worst = std::max(worst, std::abs(moved(i, j) - evaluate(F, g.x(i) - sx, g.y(j) - sy)));
  CHECK(worst < 1e-12);
  Field back = inverse(translate(translate(F, sx, sy), -sx, -sy));
  CHECK(sup_diff(back, expect) < 1e-13);
}

TEST_CASE("point evaluation and jets") {
  GridSpec g(32, 32, 1.0, 1.0);
  auto F = forward(sample(g, [](double x, double y) { return std::sin(x) * std::cos(2 * y); }));
  const double x = 0.3, y = -0.8;
  auto jet = evaluate_jet(F, x, y);
  CHECK(jet.value == doctest::Approx(std::sin(x) * std::cos(2 * y)).epsilon(1e-13));
  CHECK(jet.dx == doctest::Approx(std::cos(x) * std::cos(2 * y)).epsilon(1e-13));
  CHECK(jet.dy == doctest::Approx(-2 * std::sin(x) * std::sin(2 * y)).epsilon(1e-13));
  CHECK(jet.dxx == doctest::Approx(-std::sin(x) * std::cos(2 * y)).epsilon(1e-13));
  CHECK(jet.dxy == doctest::Approx(-2 * std::cos(x) * std::sin(2 * y)).epsilon(1e-13));
  CHECK(jet.dyy == doctest::Approx(-4 * std::sin(x) * std::cos(2 * y)).epsilon(1e-13));
  std::vector<double> xs{0.1, 1.0, 2.0}, ys{-0.5, 0.25};
  auto v = evaluate_tensor(F, xs, ys);
  for (std::size_t a = 0; a < xs.size(); ++a)
    for (std::size_t b = 0; b < ys.size(); ++b)
      CHECK(v[a * ys.size() + b] == doctest::Approx(std::sin(xs[a]) * std::cos(2 * ys[b])).epsilon(1e-13));
}
