#pragma once

// ETDRK4 (Cox-Matthews) integration of u_t + (u_xx + u_yy + u^p)_x = 0 in
// Fourier space, u_hat' = L u_hat + N[u_hat], in a lab, constant co-moving
// or maximum-tracking frame.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zk/diagnostics.hpp"
#include "zk/grid.hpp"

namespace zk {

struct FrameSpec {
  enum class Kind { lab, constant, tracking };
  Kind kind = Kind::lab;
  double v = 0.0;   ///< constant frame speed
  double x0 = 0.0;  ///< tracking: the maximum is held at (x0, 0)

  static FrameSpec lab() { return {}; }
  static FrameSpec constant(double v) { return {Kind::constant, v, 0.0}; }
  static FrameSpec tracking(double x0) { return {Kind::tracking, 0.0, x0}; }
  std::string label() const;
};

/// i kx (kx^2 + ky^2) + i v kx on the half spectrum; kx is zero on the
/// x-Nyquist row, matching odd spectral derivatives.
struct LinearSymbol {
  GridSpec grid;
  double v;
  ComplexArray values;
};
LinearSymbol linear_symbol(const GridSpec& g, double v);

struct EtdCoefficients {
  double h;
  ComplexArray E, E2, Q;
  ComplexArray alpha, beta, gamma;  ///< weights of N(u), N(a) + N(b), N(c)
};
EtdCoefficients etd_coefficients(const LinearSymbol& L, double h);

/// Cox-Matthews weights for one z = hL
struct EtdWeights {
  Complex E, E2, Q, alpha, beta, gamma;
};
EtdWeights etd_weights(Complex z, double h);

struct Breakdown {
  double t;
  long step;
  std::string cause;  ///< "overflow", "resolution", "energy" or "tracking"
};

struct EvolutionState {
  double t = 0.0;
  SpectralField spec;
  FrameSpec frame;
  double x_m = 0.0, y_m = 0.0;  ///< lab position of the frame point (x0, 0)
  double v_x = 0.0;             ///< frame velocity applied over the last/next step
  std::optional<Breakdown> broken;

  explicit EvolutionState(const GridSpec& g) : spec(g) {}
  EvolutionState(SpectralField s, FrameSpec f) : spec(std::move(s)), frame(f) {}

  /// Changes whenever spec changes; keys cached transforms.
  std::uint64_t revision = 0;
  bool trapezoid_pending = false;
  void touch();
};

/// -i kx F(u^p) + i kx v_x spec
SpectralField nonlinear_rhs(const SpectralField& spec, int p, double v_x);

/// [(u_xx + u_yy + u^p)_xx / u_xx] at the grid maximum of u.
double compute_vx(const SpectralField& spec, int p);

/// Move the maximum back to (x0, 0) by an exact phase shift if it has drifted
/// by more than one cell; the drift is added to x_m, y_m.
/// Returns true if a shift was applied.
bool recenter(EvolutionState& state, double x0);

struct StepObservation {
  bool finite;
  double tail;
  double energy;
  double energy_scale;
  double mass;
};

class Integrator {
public:
  Integrator(const GridSpec& g, int p, const FrameSpec& frame, double h, bool nonlinear = true);

  /// Real field, F(u^p) and (tracking) v_x for the current state. Performs
  /// recentering and completes the frame displacement of the previous step.
  void prepare(EvolutionState& s);
  void step(EvolutionState& s);

  /// Quantities of the prepared state, no transforms.
  StepObservation observe(const EvolutionState& s) const;
  TimeSeries::Sample sample(const EvolutionState& s, double e0, double s0) const;
  std::span<const double> real_field() const { return u_; }

  const EtdCoefficients& coefficients() const { return etd_; }
  double h() const { return etd_.h; }
  int p() const { return p_; }

private:
  void nonlinear(const SpectralField& in, double vx, SpectralField& out);
  void check_prepared(const EvolutionState& s) const;
  double vx_from_prepared(const EvolutionState& s, int i, int j) const;

  GridSpec g_;
  int p_;
  FrameSpec frame_;
  bool nonlinear_;
  EtdCoefficients etd_;
  std::vector<double> ikx_;  ///< kx with the Nyquist row zeroed

  RealArray u_, w_, scratch_;
  ComplexArray cscratch_;
  SpectralField fup_;  ///< F(u^p) of the prepared state
  SpectralField Nu_, Na_, Nb_, Nc_, a_, b_, c_;
  std::uint64_t prepared_ = 0;
};

struct BreakdownPolicy {
  bool enabled = true;
  double tail_max = 1e-2;
  double energy_max = 1e-4;
};

struct RunPlan {
  int p = 3;
  FrameSpec frame;
  double horizon = 1.0;  ///< integrate over [t0, t0 + horizon]
  long steps = 1000;
  long record_every = 0;  ///< 0: max(1, steps / 2000)
  std::vector<double> snapshot_times;
  BreakdownPolicy breakdown;
  bool nonlinear = true;
  std::string run_id;
  /// Called after each recorded sample.
  std::function<void(const EvolutionState&, const TimeSeries::Sample&)> on_record;
};

struct Snapshot {
  double t;
  Field field;
  FrameSpec frame;
  double v_x, x_m, y_m;
};

struct RunResult {
  TimeSeries series;
  std::vector<Snapshot> snapshots;  ///< requested times, then the final state
  std::optional<Breakdown> breakdown;
  double max_delta_E = 0.0;
  double max_mass_drift = 0.0;
  double final_tail = 0.0;
  long steps_taken = 0;
  std::optional<std::string> error;  ///< message of a tracking failure
};

/// Fresh state from initial data. Tracking frames first move the maximum to
/// (x0, 0) and set (x_m, y_m) to its original location.
EvolutionState initial_state(const Field& u0, const FrameSpec& frame, double t0 = 0.0);

RunResult evolve(const Field& u0, const RunPlan& plan);
RunResult evolve(EvolutionState state, const RunPlan& plan);

Snapshot make_snapshot(const EvolutionState& s);

}  // namespace zk
