#pragma once

// Ground states of -cQ + Q_xx + Q_yy + Q^p = 0.

#include <functional>
#include <optional>
#include <vector>

#include "zk/grid.hpp"

namespace zk {

struct NewtonOptions {
  double tol = 1e-10;           ///< stop when sup |R(Q)| < tol
  int max_iterations = 50;
  int gmres_restart = 30;
  int gmres_max_iterations = 600;
  double inner_tol = 1e-3;      ///< relative GMRES tolerance, scaled by min(1, sup|R|)
  int max_halvings = 10;
  std::optional<Field> initial; ///< default 2 c^{1/(p-1)} exp(-c (x^2 + y^2))
};

struct NewtonStep {
  double residual_sup;  ///< residual before the step
  int gmres_iterations;
  int halvings;
};

struct SolitonProfile {
  Field field;
  int p;
  double c;
  double residual_sup;
  std::vector<NewtonStep> history;  ///< empty for rescaled or loaded profiles
};

/// R(Q) = -cQ + Q_xx + Q_yy + Q^p, spectral derivatives.
Field ground_state_residual(const Field& q, int p, double c);
double ground_state_residual_sup(const Field& q, int p, double c);

SolitonProfile solve_ground_state(int p, double c, const GridSpec& grid, const NewtonOptions& opts = {});

/// c^{1/(p-1)} Q(sqrt(c) x, sqrt(c) y) from a c = 1 profile, by band-limited
/// evaluation on `target` (Q's own grid when omitted).
SolitonProfile rescale_soliton(const SolitonProfile& q, double c,
                               const std::optional<GridSpec>& target = std::nullopt);

struct SolitonNorms {
  double mass, energy, sup;
};
SolitonNorms soliton_norms(const SolitonProfile& q);

/// Average of u over the reflections x -> -x and y -> -y of the node set.
void symmetrize(Field& f);

}  // namespace zk
