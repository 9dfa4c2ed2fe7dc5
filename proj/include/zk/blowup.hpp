#pragma once

// Post-processing of blow-up runs: power-law fits ln g = a ln(t* - t) + b,
// rescaling length L(t) and the residual against a rescaled soliton.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zk/diagnostics.hpp"
#include "zk/grid.hpp"
#include "zk/soliton.hpp"

namespace zk {

enum class FitMethod { profiled, simplex };
std::string to_string(FitMethod m);
FitMethod parse_fit_method(const std::string& s);

struct FitResult {
  double a = 0.0, b = 0.0, t_star = 0.0;
  std::size_t first = 0;  ///< index of the first fitted sample
  std::size_t count = 0;  ///< samples in the window
  double rms_residual = 0.0;
  std::string series_name;
  FitMethod method = FitMethod::profiled;
};

/// Least-squares fit of the last `window` samples.
FitResult fit_power_law(std::span<const double> t, std::span<const double> g, std::size_t window = 500,
                        FitMethod method = FitMethod::profiled, const std::string& name = "");

/// Fits over several window lengths (those longer than the series are skipped).
std::vector<FitResult> fit_windows(std::span<const double> t, std::span<const double> g,
                                   std::span<const std::size_t> windows, FitMethod method = FitMethod::profiled,
                                   const std::string& name = "");

/// Key-value report and (t, model, data) CSV.
void write_fit_report(std::ostream& os, const FitResult& r);
void write_fit_curve(std::ostream& os, const FitResult& r, std::span<const double> t, std::span<const double> g);

struct RescaleTrace {
  std::vector<double> t, L, xm, ym;
};

/// L(t) = (Q_sup / sup_u(t))^((p-1)/2).
RescaleTrace estimate_L(const TimeSeries& series, int p, double q_sup);

struct ResidualResult {
  Field residual;
  double c_fit;
  double xc, yc;
};

/// f minus the c_fit-rescaled soliton centred at f's peak,
/// c_fit = (sup f / sup Q)^(p-1).
ResidualResult extract_residual(const Field& f, const SolitonProfile& q, double max_tail = 1e-6);

/// c^{1/(p-1)} Q(sqrt(c)(x - xc), sqrt(c)(y - yc)) on grid g. Points whose
/// image falls outside Q's box are zero.
Field place_soliton(const SolitonProfile& q, double c, double xc, double yc, const GridSpec& g);

/// Sup of the residual inside radius `core` of the centre and outside radius `outer`.
struct ResidualLevels {
  double core, ambient;
};
ResidualLevels residual_levels(const ResidualResult& r, double core, double outer);

}  // namespace zk
