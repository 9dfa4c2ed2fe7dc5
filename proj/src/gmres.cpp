#include "zk/gmres.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "zk/errors.hpp"

namespace zk {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

GmresResult gmres(const LinearMap& apply_am, const LinearMap& apply_m, std::span<const double> b,
                  std::span<double> x, double rtol, int restart, int max_iterations) {
  if (b.size() != x.size()) throw ContractViolation("gmres: size mismatch");
  if (restart < 1 || max_iterations < 1) throw ContractViolation("gmres: bad iteration limits");
  const std::size_t n = b.size();
  const int m = restart;
  GmresResult res;

  std::fill(x.begin(), x.end(), 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    res.relative_residual = 0.0;
    res.converged = true;
    return res;
  }

  std::vector<double> y(n, 0.0);  // accumulated unpreconditioned iterate
  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  std::vector<double> H(std::size_t(m + 1) * m), cs(m), sn(m), g(m + 1), w(n), coef(m);
  auto h = [&](int i, int j) -> double& { return H[std::size_t(i) * m + j]; };

  while (res.iterations < max_iterations) {
    // r = b - A M^{-1} y
    apply_am(y, w);
    for (std::size_t k = 0; k < n; ++k) V[0][k] = b[k] - w[k];
    const double beta = std::sqrt(dot(V[0], V[0]));
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      break;
    }
    for (double& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int j = 0;
    for (; j < m && res.iterations < max_iterations; ++j) {
      ++res.iterations;
      apply_am(V[j], V[j + 1]);
      // modified Gram-Schmidt, two passes
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const double hij = dot(V[i], V[j + 1]);
          if (pass == 0) h(i, j) = hij; else h(i, j) += hij;
          for (std::size_t k = 0; k < n; ++k) V[j + 1][k] -= hij * V[i][k];
        }
      const double hn = std::sqrt(dot(V[j + 1], V[j + 1]));
      h(j + 1, j) = hn;
      if (hn > 0.0)
        for (double& v : V[j + 1]) v /= hn;

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double den = std::hypot(h(j, j), h(j + 1, j));
      cs[j] = den > 0.0 ? h(j, j) / den : 1.0;
      sn[j] = den > 0.0 ? h(j + 1, j) / den : 0.0;
      h(j, j) = den;
      h(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      res.relative_residual = std::abs(g[j + 1]) / bnorm;
      if (res.relative_residual <= rtol || hn == 0.0) {
        ++j;
        break;
      }
    }

    // back substitution and update
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= h(i, k) * coef[k];
      coef[i] = h(i, i) != 0.0 ? s / h(i, i) : 0.0;
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) y[k] += coef[i] * V[i][k];
    if (res.relative_residual <= rtol) {
      res.converged = true;
      break;
    }
  }

  apply_m(y, x);
  return res;
}

}  // namespace zk
