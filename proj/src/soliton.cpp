#include "zk/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "zk/diagnostics.hpp"
#include "zk/errors.hpp"
#include "zk/gmres.hpp"

namespace zk {

namespace {

double ipow(double u, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= u;
  return r;
}

double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

void check_power(int p) {
  if (p < 2 || p > 4) throw ContractViolation(fmt::format("nonlinearity power p = {} not in {{2,3,4}}", p));
}

}  // namespace

Field ground_state_residual(const Field& q, int p, double c) {
  const GridSpec& g = q.grid;
  SpectralField Q = forward(q);
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) {
      const double k2 = g.kx(ix) * g.kx(ix) + g.ky(iy) * g.ky(iy);
      Q.at(ix, iy) *= -(c + k2);
    }
  Field r = inverse(Q);
  for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] += ipow(q.values[k], p);
  return r;
}

double ground_state_residual_sup(const Field& q, int p, double c) {
  return sup_abs(ground_state_residual(q, p, c).values);
}

void symmetrize(Field& f) {
  const int nx = f.grid.nx(), ny = f.grid.ny();
  Field out(f.grid);
  for (int i = 0; i < nx; ++i) {
    const int mi = (nx - i) % nx;
    for (int j = 0; j < ny; ++j) {
      const int mj = (ny - j) % ny;
      out(i, j) = 0.25 * (f(i, j) + f(mi, j) + f(i, mj) + f(mi, mj));
    }
  }
  f = std::move(out);
}

SolitonProfile solve_ground_state(int p, double c, const GridSpec& grid, const NewtonOptions& opts) {
  check_power(p);
  if (!(c > 0.0)) throw ContractViolation("soliton speed c must be positive");
  if (opts.initial && !(opts.initial->grid == grid))
    throw ContractViolation("initial iterate is on a different grid");

  // 2 exp(-x^2 - y^2), carried through the c-scaling of the equation.
  const double amp0 = 2.0 * std::pow(c, 1.0 / (p - 1));
  Field q = opts.initial ? *opts.initial : sample(grid, [&](double x, double y) {
    return amp0 * std::exp(-c * (x * x + y * y));
  });
  symmetrize(q);

  const std::size_t n = grid.size();
  std::vector<double> inv_symbol(grid.spectral_size());
  for (int ix = 0; ix < grid.nx(); ++ix)
    for (int iy = 0; iy < grid.nyh(); ++iy) {
      const double k2 = grid.kx(ix) * grid.kx(ix) + grid.ky(iy) * grid.ky(iy);
      inv_symbol[std::size_t(ix) * grid.nyh() + iy] = -1.0 / (c + k2);
    }

  ComplexArray spec(grid.spectral_size());
  RealArray rscratch(n);
  ComplexArray cscratch(grid.spectral_size());
  SpectralField tmp(grid);

  // M^{-1}: multiply by -(c + |k|^2)^{-1} in Fourier space.
  auto apply_m = [&](std::span<const double> v, std::span<double> out) {
    forward_into(grid, v, spec, rscratch);
    for (std::size_t k = 0; k < spec.size(); ++k) tmp.half[k] = spec[k] * inv_symbol[k];
    inverse_into(tmp, out, cscratch);
  };

  std::vector<double> pot(n), w(n);
  // J M^{-1} v = v + p Q^{p-1} M^{-1} v, as (-c + Delta) M^{-1} is the identity.
  auto apply_jm = [&](std::span<const double> v, std::span<double> out) {
    apply_m(v, w);
    for (std::size_t k = 0; k < n; ++k) out[k] = v[k] + pot[k] * w[k];
  };

  SolitonProfile prof{q, p, c, 0.0, {}};
  std::vector<double> rhs(n), delta(n);
  Field r = ground_state_residual(q, p, c);
  double rsup = sup_abs(r.values);

  for (int it = 0;; ++it) {
    if (rsup < opts.tol) break;
    if (it >= opts.max_iterations)
      throw IterationFailure(
          fmt::format("Newton iteration did not converge in {} steps (residual {:.3e})", opts.max_iterations, rsup),
          rsup);

    for (std::size_t k = 0; k < n; ++k) {
      pot[k] = p * ipow(q.values[k], p - 1);
      rhs[k] = -r.values[k];
    }
    const double eta = std::max(opts.inner_tol * std::min(1.0, rsup), 1e-13);
    const GmresResult gr =
        gmres(apply_jm, apply_m, rhs, delta, eta, opts.gmres_restart, opts.gmres_max_iterations);
    if (!gr.converged && gr.relative_residual > 0.5)
      throw InnerSolverError(fmt::format(
          "GMRES stagnated at relative residual {:.3e} after {} iterations; increase the restart length "
          "(currently {}) or the iteration cap",
          gr.relative_residual, gr.iterations, opts.gmres_restart));

    double lambda = 1.0;
    int halvings = 0;
    Field trial(grid);
    Field rtrial(grid);
    double rt = 0.0;
    for (;; ++halvings) {
      for (std::size_t k = 0; k < n; ++k) trial.values[k] = q.values[k] + lambda * delta[k];
      symmetrize(trial);
      rtrial = ground_state_residual(trial, p, c);
      rt = sup_abs(rtrial.values);
      if (std::isfinite(rt) && rt < rsup) break;
      if (halvings == opts.max_halvings)
        throw IterationFailure(
            fmt::format("Newton line search failed after {} halvings (residual {:.3e})", opts.max_halvings, rsup),
            rsup);
      lambda *= 0.5;
    }
    prof.history.push_back({rsup, gr.iterations, halvings});
    q = std::move(trial);
    r = std::move(rtrial);
    rsup = rt;
  }

  if (sup_abs(q.values) < 1e3 * opts.tol)
    throw IterationFailure("Newton iteration collapsed onto the trivial solution Q = 0", rsup);
  prof.field = std::move(q);
  prof.residual_sup = rsup;
  prof.history.push_back({rsup, 0, 0});
  return prof;
}

SolitonProfile rescale_soliton(const SolitonProfile& q, double c, const std::optional<GridSpec>& target) {
  if (q.c != 1.0) throw ContractViolation("rescale_soliton expects a c = 1 profile");
  if (!(c > 0.0)) throw ContractViolation("target speed c must be positive");
  const GridSpec g = target.value_or(q.field.grid);
  const double s = std::sqrt(c);
  const double amp = std::pow(c, 1.0 / (q.p - 1));

  Field out(g);
  if (c == 1.0 && g == q.field.grid) {
    out = q.field;
  } else {
    std::vector<double> xs(g.nx()), ys(g.ny());
    for (int i = 0; i < g.nx(); ++i) xs[i] = s * g.x(i);
    for (int j = 0; j < g.ny(); ++j) ys[j] = s * g.y(j);
    const auto vals = evaluate_tensor(forward(q.field), xs, ys);
    // Outside the source box Q has decayed; do not pick up periodic images.
    const double hx = std::numbers::pi * q.field.grid.lx(), hy = std::numbers::pi * q.field.grid.ly();
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) {
        const bool inside = std::abs(xs[i]) <= hx && std::abs(ys[j]) <= hy;
        out(i, j) = inside ? amp * vals[std::size_t(i) * g.ny() + j] : 0.0;
      }
  }
  const double tail = tail_indicator(forward(out));
  if (tail > 1e-8)
    throw ResolutionError(fmt::format("rescaled profile is under-resolved (tail indicator {:.3e})", tail));
  const double res = ground_state_residual_sup(out, q.p, c);
  return SolitonProfile{std::move(out), q.p, c, res, {}};
}

SolitonNorms soliton_norms(const SolitonProfile& q) {
  return {mass(q.field), energy(q.field, q.p), sup_norm_and_argmax(q.field).value};
}

}  // namespace zk
