#pragma once

// Initial-data families: scaled and displaced solitons, Gaussians and the
// wall-shaped bump.

#include <optional>
#include <string>
#include <vector>

#include "zk/grid.hpp"
#include "zk/soliton.hpp"

namespace zk {

struct SolitonPlacement {
  double c = 1.0;
  double x = 0.0, y = 0.0;
};

enum class WallVariant {
  ridge_y,  ///< 10 e^{-x^2} for |y| <= 1.5, caps 10 e^{-(x^2 + (y -+ 1.5)^8)} beyond: continuous, even in y
  literal   ///< split on |x| <= 1.5 with the y-shifted caps indexed by the sign of x
};

struct ScenarioSpec {
  enum class Kind { lambda_soliton, two_solitons, y_pair, gaussian, aniso_gaussian, wall };
  Kind kind = Kind::lambda_soliton;
  double lambda = 1.0;  ///< lambda_soliton factor, Gaussian amplitude
  SolitonPlacement first{}, second{};
  double a = 0.0;          ///< y_pair half separation
  double epsilon = 1.0;    ///< aniso_gaussian: lambda e^{-(x^2 + epsilon y^2)}
  double amplitude = 10.0; ///< wall height
  WallVariant wall = WallVariant::ridge_y;

  static ScenarioSpec lambda_soliton(double lambda);
  static ScenarioSpec two_solitons(SolitonPlacement s1, SolitonPlacement s2);
  static ScenarioSpec y_pair(double a);
  static ScenarioSpec gaussian(double lambda);
  static ScenarioSpec aniso_gaussian(double lambda, double epsilon);
  static ScenarioSpec wall_bump(double amplitude = 10.0, WallVariant v = WallVariant::ridge_y);

  bool uses_soliton() const;
};

std::string to_string(ScenarioSpec::Kind k);
ScenarioSpec::Kind parse_scenario_kind(const std::string& s);
std::string to_string(WallVariant v);
WallVariant parse_wall_variant(const std::string& s);

/// Builds the initial field. Soliton members use `q` (c = 1, same p) when
/// given, otherwise Q is solved on `grid`. Overlap notes for soliton pairs
/// that are not well separated are appended to `warnings`.
Field build(const ScenarioSpec& spec, const GridSpec& grid, int p, const SolitonProfile* q = nullptr,
            std::vector<std::string>* warnings = nullptr);

/// Soliton pairs: the larger of each profile's value at the other's centre.
/// Zero for single-bump scenarios.
double cross_overlap(const ScenarioSpec& spec, const GridSpec& grid, int p, const SolitonProfile* q = nullptr);

/// Threshold below which a pair counts as well separated.
inline constexpr double separation_threshold = 1e-10;

struct ScenarioPreset {
  std::string name;
  int p;
  double lx;
  ScenarioSpec spec;
  std::string note;
};
const std::vector<ScenarioPreset>& scenario_presets();
std::optional<ScenarioPreset> find_preset(const std::string& name);

}  // namespace zk
