#include "zk/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multimin.h>

#include "zk/errors.hpp"

namespace zk {

std::string to_string(FitMethod m) { return m == FitMethod::profiled ? "profiled" : "simplex"; }

FitMethod parse_fit_method(const std::string& s) {
  if (s == "profiled") return FitMethod::profiled;
  if (s == "simplex") return FitMethod::simplex;
  throw ConfigError("unknown fit method '" + s + "' (profiled | simplex)");
}

namespace {

struct Window {
  std::vector<double> t, y;  // y = ln g
  double t_last, span;
};

// (a, b) by linear least squares for a fixed t*, returning the residual sum.
struct Linear {
  double a, b, ssr;
};

Linear solve_linear(const Window& w, double t_star) {
  const std::size_t n = w.t.size();
  double sx = 0, sy = 0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(t_star - w.t[i]);
    sx += x[i];
    sy += w.y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (w.y[i] - my);
  }
  const double a = sxx > 0 ? sxy / sxx : 0.0;
  const double b = my - a * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = w.y[i] - a * x[i] - b;
    ssr += r * r;
  }
  return {a, b, ssr};
}

double ssr_full(const Window& w, double a, double b, double t_star) {
  if (!(t_star > w.t_last)) return std::numeric_limits<double>::max();
  double ssr = 0;
  for (std::size_t i = 0; i < w.t.size(); ++i) {
    const double r = w.y[i] - a * std::log(t_star - w.t[i]) - b;
    ssr += r * r;
  }
  return ssr;
}

// Profiled objective in s = ln(t* - t_last).
double profiled_objective(double s, void* params) {
  const Window& w = *static_cast<const Window*>(params);
  return solve_linear(w, w.t_last + std::exp(s)).ssr;
}

struct GslHandlerGuard {
  gsl_error_handler_t* old;
  GslHandlerGuard() : old(gsl_set_error_handler_off()) {}
  ~GslHandlerGuard() { gsl_set_error_handler(old); }
};

double profiled_t_star(const Window& w) {
  // t* in (t_last, t_last + 10 span]: coarse scan in ln(t* - t_last), then
  // golden section around the best scan point.
  const double s_hi = std::log(10.0 * w.span);
  const double s_lo = std::log(1e-10 * w.span);
  constexpr int scan = 200;
  std::vector<double> s(scan + 1), f(scan + 1);
  int best = 0;
  for (int k = 0; k <= scan; ++k) {
    s[k] = s_lo + (s_hi - s_lo) * k / scan;
    f[k] = profiled_objective(s[k], const_cast<Window*>(&w));
    if (f[k] < f[best]) best = k;
  }
  if (best == scan)
    throw NoBlowUp(fmt::format("fitted t* reached the upper bracket t_last + 10 * span = {:.6g}; "
                               "no finite-time power law",
                               w.t_last + 10.0 * w.span));
  if (best == 0) return w.t_last + std::exp(s_lo);
  if (f[best] == 0.0) return w.t_last + std::exp(s[best]);

  GslHandlerGuard guard;
  gsl_function fn{&profiled_objective, const_cast<Window*>(&w)};
  gsl_min_fminimizer* m = gsl_min_fminimizer_alloc(gsl_min_fminimizer_goldensection);
  double lo = s[best - 1], hi = s[best + 1], x = s[best];
  // strict bracketing f(x) < f(lo), f(hi) is guaranteed by the scan
  if (gsl_min_fminimizer_set_with_values(m, &fn, x, f[best], lo, f[best - 1], hi, f[best + 1]) != GSL_SUCCESS) {
    gsl_min_fminimizer_free(m);
    return w.t_last + std::exp(x);
  }
  for (int it = 0; it < 500; ++it) {
    if (gsl_min_fminimizer_iterate(m) != GSL_SUCCESS) break;
    x = gsl_min_fminimizer_x_minimum(m);
    lo = gsl_min_fminimizer_x_lower(m);
    hi = gsl_min_fminimizer_x_upper(m);
    if (gsl_min_test_interval(lo, hi, 1e-15, 1e-15) == GSL_SUCCESS) break;
  }
  gsl_min_fminimizer_free(m);
  return w.t_last + std::exp(x);
}

struct SimplexData {
  const Window* w;
};

double simplex_objective(const gsl_vector* v, void* params) {
  const Window& w = *static_cast<SimplexData*>(params)->w;
  return ssr_full(w, gsl_vector_get(v, 0), gsl_vector_get(v, 1), gsl_vector_get(v, 2));
}

FitResult finish(const Window& w, double a, double b, double ts, std::size_t first, FitMethod m,
                 const std::string& name) {
  FitResult r;
  r.a = a;
  r.b = b;
  r.t_star = ts;
  r.first = first;
  r.count = w.t.size();
  r.rms_residual = std::sqrt(ssr_full(w, a, b, ts) / double(w.t.size()));
  r.series_name = name;
  r.method = m;
  return r;
}

}  // namespace

FitResult fit_power_law(std::span<const double> t, std::span<const double> g, std::size_t window,
                        FitMethod method, const std::string& name) {
  if (t.size() != g.size()) throw ContractViolation("fit: t and g differ in length");
  if (window < 3) throw ContractViolation("fit: window needs at least 3 samples");
  if (window > t.size())
    throw ContractViolation(fmt::format("fit: window {} exceeds the {} available samples", window, t.size()));
  const std::size_t first = t.size() - window;
  Window w;
  for (std::size_t i = first; i < t.size(); ++i) {
    if (!(g[i] > 0.0) || !std::isfinite(g[i]))
      throw DomainError(fmt::format("fit: non-positive value {} at sample {}", g[i], i));
    if (i > first && !(t[i] > t[i - 1])) throw ContractViolation("fit: t must increase strictly");
    w.t.push_back(t[i]);
    w.y.push_back(std::log(g[i]));
  }
  w.t_last = w.t.back();
  w.span = w.t_last - w.t.front();

  const double ts = profiled_t_star(w);
  const Linear lin = solve_linear(w, ts);
  if (method == FitMethod::profiled) return finish(w, lin.a, lin.b, ts, first, method, name);

  // Nelder-Mead on (a, b, t*) from the profiled optimum.
  GslHandlerGuard guard;
  SimplexData data{&w};
  gsl_multimin_function fn{&simplex_objective, 3, &data};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  const double delta = ts - w.t_last;
  gsl_vector_set(x, 0, lin.a);
  gsl_vector_set(x, 1, lin.b);
  gsl_vector_set(x, 2, ts);
  gsl_vector_set(step, 0, 1e-3 * (std::abs(lin.a) + 1e-3));
  gsl_vector_set(step, 1, 1e-3 * (std::abs(lin.b) + 1e-3));
  gsl_vector_set(step, 2, 1e-3 * delta);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  for (int it = 0; it < 20000; ++it) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-13) == GSL_SUCCESS) break;
  }
  const gsl_vector* xm = gsl_multimin_fminimizer_x(m);
  double a = gsl_vector_get(xm, 0), b = gsl_vector_get(xm, 1), tsm = gsl_vector_get(xm, 2);
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(x);
  gsl_vector_free(step);
  if (!(ssr_full(w, a, b, tsm) <= ssr_full(w, lin.a, lin.b, ts))) {
    a = lin.a;
    b = lin.b;
    tsm = ts;
  }
  return finish(w, a, b, tsm, first, method, name);
}

std::vector<FitResult> fit_windows(std::span<const double> t, std::span<const double> g,
                                   std::span<const std::size_t> windows, FitMethod method, const std::string& name) {
  std::vector<FitResult> out;
  for (std::size_t w : windows)
    if (w <= t.size()) out.push_back(fit_power_law(t, g, w, method, name));
  return out;
}

void write_fit_report(std::ostream& os, const FitResult& r) {
  os << fmt::format("series = {}\nmethod = {}\nwindow = {}\nfirst = {}\na = {:.17g}\nb = {:.17g}\nt_star = {:.17g}\n"
                    "rms = {:.17g}\n",
                    r.series_name, to_string(r.method), r.count, r.first, r.a, r.b, r.t_star, r.rms_residual);
}

void write_fit_curve(std::ostream& os, const FitResult& r, std::span<const double> t, std::span<const double> g) {
  os << "t,model,data\n";
  for (std::size_t i = r.first; i < r.first + r.count && i < t.size(); ++i)
    os << fmt::format("{:.17g},{:.17g},{:.17g}\n", t[i], std::exp(r.b) * std::pow(r.t_star - t[i], r.a), g[i]);
}

RescaleTrace estimate_L(const TimeSeries& series, int p, double q_sup) {
  if (!(q_sup > 0.0)) throw ContractViolation("estimate_L: Q_sup must be positive");
  RescaleTrace tr;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (!(series.sup_u[k] > 0.0)) throw DomainError(fmt::format("estimate_L: sup_u = {} at sample {}", series.sup_u[k], k));
    tr.t.push_back(series.t[k]);
    tr.L.push_back(std::pow(q_sup / series.sup_u[k], 0.5 * (p - 1)));
    tr.xm.push_back(series.x_m[k]);
    tr.ym.push_back(series.y_m[k]);
  }
  return tr;
}

Field place_soliton(const SolitonProfile& q, double c, double xc, double yc, const GridSpec& g) {
  const double s = std::sqrt(c);
  const double amp = std::pow(c, 1.0 / (q.p - 1));
  const double px = 2 * std::numbers::pi * g.lx(), py = 2 * std::numbers::pi * g.ly();
  auto wrap = [](double d, double period) { return d - period * std::round(d / period); };
  std::vector<double> xs(g.nx()), ys(g.ny());
  for (int i = 0; i < g.nx(); ++i) xs[i] = s * wrap(g.x(i) - xc, px);
  for (int j = 0; j < g.ny(); ++j) ys[j] = s * wrap(g.y(j) - yc, py);
  const auto vals = evaluate_tensor(forward(q.field), xs, ys);
  const double hx = std::numbers::pi * q.field.grid.lx(), hy = std::numbers::pi * q.field.grid.ly();
  Field out(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const bool inside = std::abs(xs[i]) <= hx && std::abs(ys[j]) <= hy;
      out(i, j) = inside ? amp * vals[std::size_t(i) * g.ny() + j] : 0.0;
    }
  return out;
}

ResidualResult extract_residual(const Field& f, const SolitonProfile& q, double max_tail) {
  if (q.c != 1.0) throw ContractViolation("extract_residual expects a c = 1 profile");
  const SpectralField F = forward(f);
  const GridNode n = grid_argmax(f.grid, f.values);
  Peak pk = quadratic_peak(f.grid, f.values, n.i, n.j);
  if (pk.degenerate || !(n.value > 0.0)) throw DomainError("extract_residual: field has no positive peak");
  pk = spectral_peak(F, pk);

  const GridNode qn = grid_argmax(q.field.grid, q.field.values);
  const Peak qp = spectral_peak(forward(q.field), quadratic_peak(q.field.grid, q.field.values, qn.i, qn.j));
  const double c = std::pow(pk.value / qp.value, q.p - 1);

  Field sol = place_soliton(q, c, pk.x - qp.x / std::sqrt(c), pk.y - qp.y / std::sqrt(c), f.grid);
  const double tail = tail_indicator(forward(sol));
  if (tail > max_tail)
    throw ResolutionError(fmt::format("rescaled soliton (c = {:.4g}) is under-resolved on the field's grid "
                                      "(tail indicator {:.3e})",
                                      c, tail));
  ResidualResult r{f, c, pk.x, pk.y};
  for (std::size_t k = 0; k < r.residual.values.size(); ++k) r.residual.values[k] -= sol.values[k];
  return r;
}

ResidualLevels residual_levels(const ResidualResult& r, double core, double outer) {
  const GridSpec& g = r.residual.grid;
  const double px = 2 * std::numbers::pi * g.lx(), py = 2 * std::numbers::pi * g.ly();
  auto wrap = [](double d, double period) { return d - period * std::round(d / period); };
  ResidualLevels lv{0.0, 0.0};
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double dx = wrap(g.x(i) - r.xc, px), dy = wrap(g.y(j) - r.yc, py);
      const double rho = std::hypot(dx, dy);
      const double v = std::abs(r.residual(i, j));
      if (rho <= core) lv.core = std::max(lv.core, v);
      if (rho >= outer) lv.ambient = std::max(lv.ambient, v);
    }
  return lv;
}

}  // namespace zk
