#include "zk/evolution.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "zk/errors.hpp"

namespace zk {

namespace {

std::atomic<std::uint64_t> revision_counter{0};

double ipow(double u, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= u;
  return r;
}

void check_power(int p) {
  if (p < 2 || p > 4) throw ContractViolation(fmt::format("nonlinearity power p = {} not in {{2,3,4}}", p));
}

// kx for odd-order use: zero on the x-Nyquist row.
double kx_odd(const GridSpec& g, int ix) { return ix == g.nx() / 2 ? 0.0 : g.kx(ix); }
double ky_odd(const GridSpec& g, int iy) { return iy == g.ny() / 2 ? 0.0 : g.ky(iy); }

double column_weight(const GridSpec& g, int iy) { return (iy == 0 || iy == g.ny() / 2) ? 1.0 : 2.0; }

}  // namespace

void EvolutionState::touch() { revision = ++revision_counter; }

std::string FrameSpec::label() const {
  switch (kind) {
    case Kind::lab: return "lab";
    case Kind::constant: return fmt::format("constant(v={})", v);
    case Kind::tracking: return fmt::format("tracking(x0={})", x0);
  }
  return "?";
}

LinearSymbol linear_symbol(const GridSpec& g, double v) {
  LinearSymbol L{g, v, ComplexArray(g.spectral_size())};
  for (int ix = 0; ix < g.nx(); ++ix) {
    const double kx = kx_odd(g, ix);
    for (int iy = 0; iy < g.nyh(); ++iy) {
      const double ky = g.ky(iy);
      L.values[std::size_t(ix) * g.nyh() + iy] = Complex{0.0, kx * (kx * kx + ky * ky) + v * kx};
    }
  }
  return L;
}

EtdWeights etd_weights(Complex z, double h) {
  auto direct = [h](Complex w) {
    const Complex ez = std::exp(w), ez2 = std::exp(0.5 * w);
    const Complex w2 = w * w, w3 = w2 * w;
    EtdWeights r;
    r.E = ez;
    r.E2 = ez2;
    r.Q = h * (ez2 - 1.0) / w;
    r.alpha = h * (-4.0 - w + ez * (4.0 - 3.0 * w + w2)) / w3;
    r.beta = 2.0 * h * (2.0 + w + ez * (w - 2.0)) / w3;
    r.gamma = h * (-4.0 - 3.0 * w - w2 + ez * (4.0 - w)) / w3;
    return r;
  };
  if (std::abs(z) >= 0.5) return direct(z);
  // Mean over a circle of radius 1 around z avoids the cancellation near 0.
  constexpr int M = 32;
  EtdWeights acc{};
  for (int m = 0; m < M; ++m) {
    const double th = std::numbers::pi * (m + 0.5) / M * 2.0;
    const EtdWeights r = direct(z + std::polar(1.0, th));
    acc.Q += r.Q;
    acc.alpha += r.alpha;
    acc.beta += r.beta;
    acc.gamma += r.gamma;
  }
  acc.E = std::exp(z);
  acc.E2 = std::exp(0.5 * z);
  acc.Q /= double(M);
  acc.alpha /= double(M);
  acc.beta /= double(M);
  acc.gamma /= double(M);
  return acc;
}

EtdCoefficients etd_coefficients(const LinearSymbol& L, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ContractViolation("time step must be positive and finite");
  const std::size_t n = L.values.size();
  EtdCoefficients c{h, ComplexArray(n), ComplexArray(n), ComplexArray(n),
                    ComplexArray(n), ComplexArray(n), ComplexArray(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const EtdWeights w = etd_weights(h * L.values[k], h);
    c.E[k] = w.E;
    c.E2[k] = w.E2;
    c.Q[k] = w.Q;
    c.alpha[k] = w.alpha;
    c.beta[k] = w.beta;
    c.gamma[k] = w.gamma;
  }
  return c;
}

SpectralField nonlinear_rhs(const SpectralField& spec, int p, double v_x) {
  check_power(p);
  const GridSpec& g = spec.grid;
  Field u = inverse(spec);
  for (double& v : u.values) v = ipow(v, p);
  SpectralField out = forward(u);
  for (int ix = 0; ix < g.nx(); ++ix) {
    const double kx = kx_odd(g, ix);
    for (int iy = 0; iy < g.nyh(); ++iy)
      out.at(ix, iy) = Complex{0.0, -kx} * out.at(ix, iy) + Complex{0.0, kx * v_x} * spec.at(ix, iy);
  }
  return out;
}

namespace {

// Curvature floor for the tracking velocity.
void check_curvature(double uxx, double sup, const GridSpec& g) {
  const double eps = 1e-8 * sup / (g.dx() * g.dx());
  if (!(std::abs(uxx) >= eps))
    throw DegenerateMaximum(fmt::format("u_xx = {:.3e} at the maximum is below the curvature floor {:.3e}", uxx, eps));
}

double vx_formula(const SpectralField& spec, const SpectralField& fup, int i, int j, double sup) {
  const GridSpec& g = spec.grid;
  const double x = g.x(i), y = g.y(j);
  SpectralField w(g);
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) {
      const double k2 = g.kx(ix) * g.kx(ix) + g.ky(iy) * g.ky(iy);
      w.at(ix, iy) = -k2 * spec.at(ix, iy) + fup.at(ix, iy);
    }
  const double uxx = evaluate_jet(spec, x, y).dxx;
  check_curvature(uxx, sup, g);
  return evaluate_jet(w, x, y).dxx / uxx;
}

}  // namespace

double compute_vx(const SpectralField& spec, int p) {
  check_power(p);
  Field u = inverse(spec);
  const GridNode n = grid_argmax(spec.grid, u.values);
  for (double& v : u.values) v = ipow(v, p);
  return vx_formula(spec, forward(u), n.i, n.j, std::abs(n.value));
}

namespace {

// Drift of the maximum from (x0, 0), wrapped into the periodic box.
struct Drift {
  double sx, sy;
};

double wrap(double d, double period) { return d - period * std::round(d / period); }

Drift peak_drift(const SpectralField& F, std::span<const double> u, double x0) {
  const GridSpec& g = F.grid;
  const GridNode n = grid_argmax(g, u);
  Peak pk = quadratic_peak(g, u, n.i, n.j);
  const double px = 2 * std::numbers::pi * g.lx(), py = 2 * std::numbers::pi * g.ly();
  Drift d{wrap(pk.x - x0, px), wrap(pk.y, py)};
  if (std::abs(d.sx) <= g.dx() && std::abs(d.sy) <= g.dy()) return d;
  pk = spectral_peak(F, pk);
  return {wrap(pk.x - x0, px), wrap(pk.y, py)};
}

bool apply_recenter(EvolutionState& s, const Drift& d) {
  const GridSpec& g = s.spec.grid;
  if (std::abs(d.sx) <= g.dx() && std::abs(d.sy) <= g.dy()) return false;
  if (std::abs(d.sx) > 0.5 * std::numbers::pi * g.lx() || std::abs(d.sy) > 0.5 * std::numbers::pi * g.ly())
    throw TrackingLost(fmt::format("maximum drifted by ({:.4g}, {:.4g}), beyond a quarter period", d.sx, d.sy));
  s.spec = translate(s.spec, -d.sx, -d.sy);
  s.x_m += d.sx;
  s.y_m += d.sy;
  s.touch();
  return true;
}

}  // namespace

bool recenter(EvolutionState& state, double x0) {
  Field u = inverse(state.spec);
  return apply_recenter(state, peak_drift(state.spec, u.values, x0));
}

// ---------------------------------------------------------------------------

Integrator::Integrator(const GridSpec& g, int p, const FrameSpec& frame, double h, bool nonlinear)
    : g_(g),
      p_(p),
      frame_(frame),
      nonlinear_(nonlinear),
      etd_(etd_coefficients(linear_symbol(g, frame.kind == FrameSpec::Kind::constant ? frame.v : 0.0), h)),
      ikx_(g.nx()),
      u_(g.size()),
      w_(g.size()),
      scratch_(g.size()),
      cscratch_(g.spectral_size()),
      fup_(g),
      Nu_(g), Na_(g), Nb_(g), Nc_(g), a_(g), b_(g), c_(g) {
  check_power(p);
  for (int ix = 0; ix < g.nx(); ++ix) ikx_[ix] = kx_odd(g, ix);
}

void Integrator::nonlinear(const SpectralField& in, double vx, SpectralField& out) {
  const int nyh = g_.nyh();
  if (!nonlinear_) {
    for (int ix = 0; ix < g_.nx(); ++ix)
      for (int iy = 0; iy < nyh; ++iy) out.at(ix, iy) = Complex{0.0, ikx_[ix] * vx} * in.at(ix, iy);
    return;
  }
  inverse_into(in, w_, cscratch_);
  for (double& v : w_) v = ipow(v, p_);
  forward_into(g_, w_, out.half, scratch_);
  for (int ix = 0; ix < g_.nx(); ++ix) {
    const double kx = ikx_[ix];
    Complex* o = out.half.data() + std::size_t(ix) * nyh;
    const Complex* s = in.half.data() + std::size_t(ix) * nyh;
    for (int iy = 0; iy < nyh; ++iy) o[iy] = Complex{0.0, -kx} * o[iy] + Complex{0.0, kx * vx} * s[iy];
  }
}

void Integrator::check_prepared(const EvolutionState& s) const {
  if (prepared_ != s.revision || s.revision == 0)
    throw ContractViolation("integrator: state not prepared");
}

double Integrator::vx_from_prepared(const EvolutionState& s, int i, int j) const {
  return vx_formula(s.spec, fup_, i, j, std::abs(u_[std::size_t(i) * g_.ny() + j]));
}

void Integrator::prepare(EvolutionState& s) {
  if (!(s.spec.grid == g_)) throw ContractViolation("integrator: state is on a different grid");
  if (s.revision == 0) s.touch();
  if (prepared_ == s.revision && !s.trapezoid_pending) return;

  inverse_into(s.spec, u_, cscratch_);
  bool finite = true;
  for (double v : u_) finite = finite && std::isfinite(v);
  const bool tracking = frame_.kind == FrameSpec::Kind::tracking;
  if (tracking && finite && apply_recenter(s, peak_drift(s.spec, u_, frame_.x0)))
    inverse_into(s.spec, u_, cscratch_);
  for (std::size_t k = 0; k < u_.size(); ++k) w_[k] = ipow(u_[k], p_);
  forward_into(g_, w_, fup_.half, scratch_);
  if (!nonlinear_) std::fill(fup_.half.begin(), fup_.half.end(), Complex{});

  double vnew = frame_.kind == FrameSpec::Kind::constant ? frame_.v : 0.0;
  if (tracking) {
    const GridNode n = grid_argmax(g_, u_);
    vnew = finite ? vx_from_prepared(s, n.i, n.j) : s.v_x;
  }
  if (s.trapezoid_pending) {
    s.x_m += 0.5 * etd_.h * vnew;
    s.trapezoid_pending = false;
  }
  s.v_x = vnew;
  prepared_ = s.revision;
}

void Integrator::step(EvolutionState& s) {
  prepare(s);
  const double vx = frame_.kind == FrameSpec::Kind::tracking ? s.v_x : 0.0;
  const std::size_t n = g_.spectral_size();
  const int nyh = g_.nyh();

  // N(u) from the cached F(u^p)
  for (int ix = 0; ix < g_.nx(); ++ix) {
    const double kx = ikx_[ix];
    for (int iy = 0; iy < nyh; ++iy) {
      const std::size_t k = std::size_t(ix) * nyh + iy;
      Nu_.half[k] = Complex{0.0, -kx} * fup_.half[k] + Complex{0.0, kx * vx} * s.spec.half[k];
    }
  }
  const auto& E = etd_.E;
  const auto& E2 = etd_.E2;
  const auto& Qw = etd_.Q;
  const Complex* u = s.spec.half.data();
  for (std::size_t k = 0; k < n; ++k) a_.half[k] = E2[k] * u[k] + Qw[k] * Nu_.half[k];
  nonlinear(a_, vx, Na_);
  for (std::size_t k = 0; k < n; ++k) b_.half[k] = E2[k] * u[k] + Qw[k] * Na_.half[k];
  nonlinear(b_, vx, Nb_);
  for (std::size_t k = 0; k < n; ++k) c_.half[k] = E2[k] * a_.half[k] + Qw[k] * (2.0 * Nb_.half[k] - Nu_.half[k]);
  nonlinear(c_, vx, Nc_);
  for (std::size_t k = 0; k < n; ++k)
    s.spec.half[k] = E[k] * u[k] + etd_.alpha[k] * Nu_.half[k] + etd_.beta[k] * (Na_.half[k] + Nb_.half[k]) +
                     etd_.gamma[k] * Nc_.half[k];

  s.t += etd_.h;
  switch (frame_.kind) {
    case FrameSpec::Kind::lab: break;
    case FrameSpec::Kind::constant: s.x_m += etd_.h * frame_.v; break;
    case FrameSpec::Kind::tracking:
      s.x_m += 0.5 * etd_.h * s.v_x;
      s.trapezoid_pending = true;
      break;
  }
  s.touch();
}

StepObservation Integrator::observe(const EvolutionState& s) const {
  check_prepared(s);
  StepObservation ob{true, 0.0, 0.0, 0.0, 0.0};
  double pot = 0.0, pot_abs = 0.0;
  {
    std::vector<double> up1(u_.size()), u2(u_.size());
    for (std::size_t k = 0; k < u_.size(); ++k) {
      const double v = u_[k];
      ob.finite = ob.finite && std::isfinite(v);
      up1[k] = ipow(v, p_ + 1);
      u2[k] = v * v;
    }
    pot = quadrature(g_, up1) / (p_ + 1);
    for (double& v : up1) v = std::abs(v);
    pot_abs = quadrature(g_, up1) / (p_ + 1);
    ob.mass = quadrature(g_, u2);
  }
  // kinetic part by Parseval, odd derivatives without Nyquist modes
  std::vector<double> rows(g_.nx());
  for (int ix = 0; ix < g_.nx(); ++ix) {
    const double kx = kx_odd(g_, ix);
    double acc = 0.0;
    for (int iy = 0; iy < g_.nyh(); ++iy) {
      const double ky = ky_odd(g_, iy);
      acc += column_weight(g_, iy) * (kx * kx + ky * ky) * std::norm(s.spec.at(ix, iy));
    }
    rows[ix] = acc;
  }
  const double kinetic = 0.5 * g_.area() * pairwise_sum(rows);
  ob.energy = kinetic - pot;
  ob.energy_scale = kinetic + pot_abs;
  ob.tail = tail_indicator(s.spec);
  if (!std::isfinite(ob.energy) || !std::isfinite(ob.tail)) ob.finite = false;
  return ob;
}

TimeSeries::Sample Integrator::sample(const EvolutionState& s, double e0, double s0) const {
  const StepObservation ob = observe(s);
  std::size_t best = 0;
  for (std::size_t k = 1; k < u_.size(); ++k)
    if (std::abs(u_[k]) > std::abs(u_[best])) best = k;
  const Peak pk = quadratic_peak(g_, u_, int(best / g_.ny()), int(best % g_.ny()));
  std::vector<double> rows(g_.nx());
  for (int ix = 0; ix < g_.nx(); ++ix) {
    const double kx = kx_odd(g_, ix);
    double acc = 0.0;
    for (int iy = 0; iy < g_.nyh(); ++iy) acc += column_weight(g_, iy) * kx * kx * std::norm(s.spec.at(ix, iy));
    rows[ix] = acc;
  }
  const double l2ux = std::sqrt(g_.area() * pairwise_sum(rows));
  return {s.t,   pk.value, l2ux, ob.mass, ob.energy, energy_drift(ob.energy, e0, s0),
          s.v_x, pk.x,     pk.y, s.x_m,   s.y_m};
}

// ---------------------------------------------------------------------------

EvolutionState initial_state(const Field& u0, const FrameSpec& frame, double t0) {
  EvolutionState s(forward(u0), frame);
  s.t = t0;
  if (frame.kind == FrameSpec::Kind::tracking) {
    const GridNode n = grid_argmax(u0.grid, u0.values);
    Peak pk = quadratic_peak(u0.grid, u0.values, n.i, n.j);
    if (pk.degenerate) throw DegenerateMaximum("initial data has no strict maximum to track");
    pk = spectral_peak(s.spec, pk);
    s.spec = translate(s.spec, frame.x0 - pk.x, -pk.y);
    s.x_m = pk.x;
    s.y_m = pk.y;
  }
  s.touch();
  return s;
}

Snapshot make_snapshot(const EvolutionState& s) {
  return {s.t, inverse(s.spec), s.frame, s.v_x, s.x_m, s.y_m};
}

RunResult evolve(const Field& u0, const RunPlan& plan) { return evolve(initial_state(u0, plan.frame), plan); }

RunResult evolve(EvolutionState state, const RunPlan& plan) {
  check_power(plan.p);
  if (plan.steps < 1) throw ContractViolation("run plan needs at least one step");
  if (!(plan.horizon > 0.0) || !std::isfinite(plan.horizon)) throw ContractViolation("run horizon must be positive");
  state.frame = plan.frame;
  const GridSpec g = state.spec.grid;
  const double h = plan.horizon / double(plan.steps);
  const long every = plan.record_every > 0 ? plan.record_every : std::max(1L, plan.steps / 2000);
  Integrator integ(g, plan.p, plan.frame, h, plan.nonlinear);

  RunResult res;
  res.series.meta = {plan.p, g.nx(), g.ny(), g.lx(), g.ly(), plan.frame.label(), plan.run_id};
  const double t0 = state.t;
  std::vector<double> snaps = plan.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  while (next_snap < snaps.size() && snaps[next_snap] < t0 - 0.5 * h) ++next_snap;

  integ.prepare(state);
  const StepObservation ob0 = integ.observe(state);
  const double e0 = ob0.energy, s0 = ob0.energy_scale, m0 = ob0.mass;

  auto record = [&] {
    const TimeSeries::Sample smp = integ.sample(state, e0, s0);
    res.series.append(smp);
    if (plan.on_record) plan.on_record(state, smp);
  };

  for (long n = 0;; ++n) {
    if (n > 0) {
      try {
        integ.prepare(state);
      } catch (const Error& e) {
        // tracking failures end the run like a breakdown, keeping what was recorded
        state.broken = Breakdown{state.t, n, "tracking"};
        res.breakdown = state.broken;
        res.error = e.what();
        break;
      }
    }
    const StepObservation ob = integ.observe(state);
    std::optional<std::string> cause;
    if (!ob.finite) cause = "overflow";
    else if (plan.breakdown.enabled && ob.tail > plan.breakdown.tail_max) cause = "resolution";
    else if (plan.breakdown.enabled && energy_drift(ob.energy, e0, s0) > plan.breakdown.energy_max) cause = "energy";
    if (cause) {
      state.broken = Breakdown{state.t, n, *cause};
      res.breakdown = state.broken;
      if (ob.finite) record();
      break;
    }
    res.max_delta_E = std::max(res.max_delta_E, energy_drift(ob.energy, e0, s0));
    res.max_mass_drift = std::max(res.max_mass_drift, m0 > 0 ? std::abs(ob.mass / m0 - 1.0) : std::abs(ob.mass));
    res.final_tail = ob.tail;
    while (next_snap < snaps.size() && snaps[next_snap] <= state.t + 0.5 * h) {
      res.snapshots.push_back(make_snapshot(state));
      ++next_snap;
    }
    if (n == plan.steps) {
      record();
      break;
    }
    if (n % every == 0) record();
    integ.step(state);
    res.steps_taken = n + 1;
  }
  res.snapshots.push_back(make_snapshot(state));
  return res;
}

}  // namespace zk
