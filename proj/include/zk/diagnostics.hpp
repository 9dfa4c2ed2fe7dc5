#pragma once

// Conserved quantities, norms, peak location and the recorded time series.

#include <iosfwd>
#include <string>
#include <vector>

#include "zk/grid.hpp"

namespace zk {

/// M[u] = integral of u^2.
double mass(const Field& f);

/// E[u] = 1/2 integral |grad u|^2 - 1/(p+1) integral u^(p+1).
double energy(const Field& f, int p);

/// Sum of the magnitudes of the two energy contributions. Used as the
/// normalisation of energy drift when E[u0] itself is (numerically) zero,
/// as for the critical ground state.
double energy_scale(const Field& f, int p);

/// Relative energy drift |E/E0 - 1|; falls back to |E - E0| / scale0 when
/// |E0| < 1e-6 * scale0.
double energy_drift(double e, double e0, double scale0);

/// sqrt(integral (d_x u)^2).
double l2_ux(const Field& f);

struct Peak {
  double value;     ///< interpolated peak value (of |u|)
  double x, y;      ///< interpolated location
  int i, j;         ///< grid node of the maximum
  bool degenerate;  ///< no strict local maximum (e.g. constant field)
};

/// Grid maximum of |u| refined by a local 2D quadratic fit.
Peak sup_norm_and_argmax(const Field& f);

/// Grid maximum of u itself (not |u|), first node on ties.
struct GridNode {
  int i, j;
  double value;
};
GridNode grid_argmax(const GridSpec& g, std::span<const double> values);

/// Local 2D quadratic fit around node (i, j) of the given samples.
Peak quadratic_peak(const GridSpec& g, std::span<const double> values, int i, int j);

/// Maximum of the trigonometric interpolant, polished by Newton iteration
/// from `guess`. Accurate to rounding for well-resolved peaks.
Peak spectral_peak(const SpectralField& F, const Peak& guess);

/// Columns recorded during a run.
struct TimeSeries {
  struct Metadata {
    int p = 0;
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    std::string frame;  ///< "lab" or "tracking"
    std::string run_id;
  } meta;

  std::vector<double> t, sup_u, l2_ux, mass, energy, delta_E, v_x, xmax, ymax, x_m, y_m;

  struct Sample {
    double t, sup_u, l2_ux, mass, energy, delta_E, v_x, xmax, ymax, x_m, y_m;
  };

  std::size_t size() const noexcept { return t.size(); }
  void append(const Sample& s);
  Sample row(std::size_t k) const;
  /// Append another series (e.g. a restart segment).
  void extend(const TimeSeries& other);

  /// Column by name; throws ContractViolation for unknown names.
  const std::vector<double>& column(const std::string& name) const;
  static const std::vector<std::string>& column_names();

  /// Header row, one row per sample, 17 significant digits. Metadata goes
  /// first as "# key=value" comment lines, which read_csv() parses back.
  void write_csv(std::ostream& os) const;
  static TimeSeries read_csv(std::istream& is);
};

}  // namespace zk
