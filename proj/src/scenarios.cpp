#include "zk/scenarios.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "zk/errors.hpp"

namespace zk {

ScenarioSpec ScenarioSpec::lambda_soliton(double lambda) {
  ScenarioSpec s;
  s.kind = Kind::lambda_soliton;
  s.lambda = lambda;
  return s;
}

ScenarioSpec ScenarioSpec::two_solitons(SolitonPlacement s1, SolitonPlacement s2) {
  ScenarioSpec s;
  s.kind = Kind::two_solitons;
  s.first = s1;
  s.second = s2;
  return s;
}

ScenarioSpec ScenarioSpec::y_pair(double a) {
  ScenarioSpec s;
  s.kind = Kind::y_pair;
  s.a = a;
  return s;
}

ScenarioSpec ScenarioSpec::gaussian(double lambda) {
  ScenarioSpec s;
  s.kind = Kind::gaussian;
  s.lambda = lambda;
  return s;
}

ScenarioSpec ScenarioSpec::aniso_gaussian(double lambda, double epsilon) {
  ScenarioSpec s;
  s.kind = Kind::aniso_gaussian;
  s.lambda = lambda;
  s.epsilon = epsilon;
  return s;
}

ScenarioSpec ScenarioSpec::wall_bump(double amplitude, WallVariant v) {
  ScenarioSpec s;
  s.kind = Kind::wall;
  s.amplitude = amplitude;
  s.wall = v;
  return s;
}

bool ScenarioSpec::uses_soliton() const {
  return kind == Kind::lambda_soliton || kind == Kind::two_solitons || kind == Kind::y_pair;
}

namespace {

const std::pair<ScenarioSpec::Kind, const char*> kind_names[] = {
    {ScenarioSpec::Kind::lambda_soliton, "lambda_soliton"}, {ScenarioSpec::Kind::two_solitons, "two_solitons"},
    {ScenarioSpec::Kind::y_pair, "y_pair"},                 {ScenarioSpec::Kind::gaussian, "gaussian"},
    {ScenarioSpec::Kind::aniso_gaussian, "aniso_gaussian"}, {ScenarioSpec::Kind::wall, "wall"},
};

void check_inside(const GridSpec& g, double x, double y) {
  if (!(std::abs(x) < std::numbers::pi * g.lx() && std::abs(y) < std::numbers::pi * g.ly()))
    throw ConfigError(fmt::format("soliton centre ({}, {}) lies outside the box", x, y));
}

struct SolitonSource {
  SolitonProfile q;
  const GridSpec& grid;

  SolitonSource(const GridSpec& g, int p, const SolitonProfile* given)
      : q(given ? *given : solve_ground_state(p, 1.0, g)), grid(g) {
    if (q.p != p) throw ContractViolation(fmt::format("soliton profile has p = {}, scenario needs p = {}", q.p, p));
    if (q.c != 1.0) throw ContractViolation("scenario solitons are built from a c = 1 profile");
  }

  // Q_c centred at (x, y), by band-limited translation
  SpectralField placed(const SolitonPlacement& s) const {
    check_inside(grid, s.x, s.y);
    if (!(s.c > 0.0)) throw ConfigError(fmt::format("soliton speed c = {} must be positive", s.c));
    SpectralField F = (s.c == 1.0 && q.field.grid == grid) ? forward(q.field)
                                                           : forward(rescale_soliton(q, s.c, grid).field);
    if (s.x == 0.0 && s.y == 0.0) return F;
    return translate(F, s.x, s.y);
  }
};

std::pair<SolitonPlacement, SolitonPlacement> pair_of(const ScenarioSpec& spec) {
  if (spec.kind == ScenarioSpec::Kind::y_pair) return {{1.0, 0.0, spec.a}, {1.0, 0.0, -spec.a}};
  return {spec.first, spec.second};
}

double overlap(const SolitonSource& src, const ScenarioSpec& spec) {
  const auto [s1, s2] = pair_of(spec);
  const SpectralField a = src.placed(s1), b = src.placed(s2);
  return std::max(std::abs(evaluate(a, s2.x, s2.y)), std::abs(evaluate(b, s1.x, s1.y)));
}

}  // namespace

std::string to_string(ScenarioSpec::Kind k) {
  for (const auto& [kind, name] : kind_names)
    if (kind == k) return name;
  return "?";
}

ScenarioSpec::Kind parse_scenario_kind(const std::string& s) {
  for (const auto& [kind, name] : kind_names)
    if (s == name) return kind;
  throw ConfigError("unknown scenario kind '" + s + "'");
}

std::string to_string(WallVariant v) { return v == WallVariant::ridge_y ? "ridge_y" : "literal"; }

WallVariant parse_wall_variant(const std::string& s) {
  if (s == "ridge_y") return WallVariant::ridge_y;
  if (s == "literal") return WallVariant::literal;
  throw ConfigError("unknown wall variant '" + s + "' (ridge_y | literal)");
}

Field build(const ScenarioSpec& spec, const GridSpec& grid, int p, const SolitonProfile* q,
            std::vector<std::string>* warnings) {
  using K = ScenarioSpec::Kind;
  if (p < 2 || p > 4) throw ConfigError(fmt::format("p = {} not in {{2, 3, 4}}", p));
  switch (spec.kind) {
    case K::lambda_soliton: {
      SolitonSource src(grid, p, q);
      Field f = inverse(src.placed({1.0, 0.0, 0.0}));
      for (double& v : f.values) v *= spec.lambda;
      return f;
    }
    case K::two_solitons:
    case K::y_pair: {
      SolitonSource src(grid, p, q);
      const auto [s1, s2] = pair_of(spec);
      SpectralField sum = src.placed(s1);
      const SpectralField b = src.placed(s2);
      for (std::size_t k = 0; k < sum.half.size(); ++k) sum.half[k] += b.half[k];
      if (warnings) {
        const double ov = overlap(src, spec);
        if (ov >= separation_threshold)
          warnings->push_back(fmt::format("solitons not well separated: overlap {:.3e} at the other centre", ov));
      }
      return inverse(sum);
    }
    case K::gaussian:
      return sample(grid, [&](double x, double y) { return spec.lambda * std::exp(-(x * x + y * y)); });
    case K::aniso_gaussian:
      return sample(grid, [&](double x, double y) { return spec.lambda * std::exp(-(x * x + spec.epsilon * y * y)); });
    case K::wall: {
      const double A = spec.amplitude;
      if (spec.wall == WallVariant::ridge_y)
        return sample(grid, [&](double x, double y) {
          if (std::abs(y) <= 1.5) return A * std::exp(-x * x);
          const double s = y > 0 ? y - 1.5 : y + 1.5;
          return A * std::exp(-(x * x + std::pow(s, 8)));
        });
      // printed case split: |x| <= 1.5, x > 1.5 with (y - 1.5), x < -1.5 with (y + 1.5)
      return sample(grid, [&](double x, double y) {
        if (std::abs(x) <= 1.5) return A * std::exp(-x * x);
        const double s = x > 0 ? y - 1.5 : y + 1.5;
        return A * std::exp(-(x * x + std::pow(s, 8)));
      });
    }
  }
  throw ContractViolation("unhandled scenario kind");
}

double cross_overlap(const ScenarioSpec& spec, const GridSpec& grid, int p, const SolitonProfile* q) {
  if (spec.kind != ScenarioSpec::Kind::two_solitons && spec.kind != ScenarioSpec::Kind::y_pair) return 0.0;
  SolitonSource src(grid, p, q);
  return overlap(src, spec);
}

const std::vector<ScenarioPreset>& scenario_presets() {
  static const std::vector<ScenarioPreset> presets = {
      {"soliton", 3, 10, ScenarioSpec::lambda_soliton(1.0), "ground state, propagation check with frame v = 1"},
      {"lambda0.9_p2", 2, 10, ScenarioSpec::lambda_soliton(0.9), "perturbed soliton, settles to a soliton"},
      {"lambda1.1_p2", 2, 10, ScenarioSpec::lambda_soliton(1.1), "perturbed soliton, settles to a soliton"},
      {"collision", 2, 20, ScenarioSpec::two_solitons({2.0, -10.0, 0.0}, {1.0, 0.0, 0.0}),
       "Q_2(x + 10, y) + Q(x, y): faster soliton overtakes"},
      {"collision_offset", 2, 20, ScenarioSpec::two_solitons({2.0, -10.0, -1.0}, {1.0, 0.0, 0.0}),
       "Q_2(x + 10, y + 1) + Q(x, y)"},
      {"y_pair_a2", 2, 10, ScenarioSpec::y_pair(2.0), "close pair, merges into one soliton"},
      {"y_pair_a5", 2, 10, ScenarioSpec::y_pair(5.0), "distant pair"},
      {"gauss10_p2", 2, 10, ScenarioSpec::gaussian(10.0), "soliton plus radiation"},
      {"wall", 2, 10, ScenarioSpec::wall_bump(10.0), "extended maximum, ridge along y"},
      {"aniso25", 2, 10, ScenarioSpec::aniso_gaussian(25.0, 0.05), "broad bump 25 e^{-(x^2 + 0.05 y^2)}"},
      {"critical1.1Q", 3, 10, ScenarioSpec::lambda_soliton(1.1), "blow-up, tracking frame"},
      {"critical0.9Q", 3, 10, ScenarioSpec::lambda_soliton(0.9), "disperses"},
      {"gauss3_p3", 3, 5, ScenarioSpec::gaussian(3.0), "blow-up, tracking frame"},
      {"gauss2_p3", 3, 5, ScenarioSpec::gaussian(2.0), "disperses"},
      {"super1.1Q", 4, 2, ScenarioSpec::lambda_soliton(1.1), "blow-up, lab frame"},
      {"super0.9Q", 4, 2, ScenarioSpec::lambda_soliton(0.9), "disperses, decreasing sup norm"},
  };
  return presets;
}

std::optional<ScenarioPreset> find_preset(const std::string& name) {
  for (const auto& p : scenario_presets())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace zk
