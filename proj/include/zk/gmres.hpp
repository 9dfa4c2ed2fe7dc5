#pragma once

#include <functional>
#include <span>

namespace zk {

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct GmresResult {
  int iterations = 0;
  double relative_residual = 1.0;  ///< ||b - A x|| / ||b|| estimate
  bool converged = false;
};

/// Restarted GMRES(m) for A x = b from x = 0, right-preconditioned: the
/// iteration runs on A M^{-1} y = b and returns x = M^{-1} y.
/// `apply_am` must compute A M^{-1} v and `apply_m` must compute M^{-1} v.
GmresResult gmres(const LinearMap& apply_am, const LinearMap& apply_m, std::span<const double> b,
                  std::span<double> x, double rtol, int restart, int max_iterations);

}  // namespace zk
