#include "zk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "zk/errors.hpp"

namespace zk {

namespace {

double ipow(double u, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= u;
  return r;
}

Field squared(Field f) {
  for (double& v : f.values) v *= v;
  return f;
}

}  // namespace

double mass(const Field& f) { return quadrature(squared(f)); }

double l2_ux(const Field& f) {
  return std::sqrt(quadrature(squared(inverse(derivative(forward(f), 1, 0)))));
}

namespace {

struct EnergyParts {
  double kinetic, potential;
};

EnergyParts energy_parts(const Field& f, int p, bool magnitude) {
  auto F = forward(f);
  Field ux = inverse(derivative(F, 1, 0));
  Field uy = inverse(derivative(F, 0, 1));
  Field grad2(f.grid), up(f.grid);
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    grad2.values[k] = ux.values[k] * ux.values[k] + uy.values[k] * uy.values[k];
    const double w = ipow(f.values[k], p + 1);
    up.values[k] = magnitude ? std::abs(w) : w;
  }
  return {0.5 * quadrature(grad2), quadrature(up) / (p + 1)};
}

}  // namespace

double energy(const Field& f, int p) {
  auto e = energy_parts(f, p, false);
  return e.kinetic - e.potential;
}

double energy_scale(const Field& f, int p) {
  auto e = energy_parts(f, p, true);
  return e.kinetic + e.potential;
}

double energy_drift(double e, double e0, double scale0) {
  if (std::abs(e0) >= 1e-6 * scale0) return std::abs(e / e0 - 1.0);
  return scale0 > 0.0 ? std::abs(e - e0) / scale0 : std::abs(e - e0);
}

GridNode grid_argmax(const GridSpec& g, std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return {int(best / g.ny()), int(best % g.ny()), values[best]};
}

Peak quadratic_peak(const GridSpec& g, std::span<const double> v, int i, int j) {
  const int nx = g.nx(), ny = g.ny();
  auto at = [&](int a, int b) {
    a = (a % nx + nx) % nx;
    b = (b % ny + ny) % ny;
    return v[std::size_t(a) * ny + b];
  };
  const double f0 = at(i, j);
  // Derivatives in units of cells.
  const double gx = 0.5 * (at(i + 1, j) - at(i - 1, j));
  const double gy = 0.5 * (at(i, j + 1) - at(i, j - 1));
  const double hxx = at(i + 1, j) - 2 * f0 + at(i - 1, j);
  const double hyy = at(i, j + 1) - 2 * f0 + at(i, j - 1);
  const double hxy = 0.25 * (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1));
  const double det = hxx * hyy - hxy * hxy;
  Peak pk{f0, g.x(i), g.y(j), i, j, false};
  // Needs a strict local extremum of the sign of f0.
  const bool definite = det > 0.0 && (f0 >= 0 ? hxx < 0.0 : hxx > 0.0);
  if (!definite) {
    pk.degenerate = true;
    pk.value = std::abs(f0);
    return pk;
  }
  double sx = -(hyy * gx - hxy * gy) / det;
  double sy = -(hxx * gy - hxy * gx) / det;
  sx = std::clamp(sx, -1.0, 1.0);
  sy = std::clamp(sy, -1.0, 1.0);
  pk.value = std::abs(f0 + 0.5 * (gx * sx + gy * sy));
  pk.x = g.x(i) + sx * g.dx();
  pk.y = g.y(j) + sy * g.dy();
  return pk;
}

Peak sup_norm_and_argmax(const Field& f) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < f.values.size(); ++k)
    if (std::abs(f.values[k]) > std::abs(f.values[best])) best = k;
  const int i = int(best / f.grid.ny()), j = int(best % f.grid.ny());
  return quadratic_peak(f.grid, f.values, i, j);
}

Peak spectral_peak(const SpectralField& F, const Peak& guess) {
  Peak pk = guess;
  if (guess.degenerate) return pk;
  double x = guess.x, y = guess.y;
  const double sign = evaluate(F, x, y) >= 0 ? 1.0 : -1.0;
  for (int it = 0; it < 20; ++it) {
    const PointJet jet = evaluate_jet(F, x, y);
    const double det = jet.dxx * jet.dyy - jet.dxy * jet.dxy;
    if (!(det > 0.0)) break;
    const double sx = -(jet.dyy * jet.dx - jet.dxy * jet.dy) / det;
    const double sy = -(jet.dxx * jet.dy - jet.dxy * jet.dx) / det;
    // Newton on a smooth peak starting within one cell; refuse wild jumps.
    if (std::abs(sx) > 2 * F.grid.dx() || std::abs(sy) > 2 * F.grid.dy()) break;
    x += sx;
    y += sy;
    if (std::abs(sx) < 1e-15 * F.grid.dx() && std::abs(sy) < 1e-15 * F.grid.dy()) break;
  }
  pk.x = x;
  pk.y = y;
  pk.value = sign * evaluate(F, x, y);
  return pk;
}

// ---------------------------------------------------------------------------

void TimeSeries::append(const Sample& s) {
  if (!t.empty() && !(s.t > t.back()))
    throw ContractViolation(fmt::format("time series: t = {} does not increase past {}", s.t, t.back()));
  t.push_back(s.t);
  sup_u.push_back(s.sup_u);
  l2_ux.push_back(s.l2_ux);
  mass.push_back(s.mass);
  energy.push_back(s.energy);
  delta_E.push_back(s.delta_E);
  v_x.push_back(s.v_x);
  xmax.push_back(s.xmax);
  ymax.push_back(s.ymax);
  x_m.push_back(s.x_m);
  y_m.push_back(s.y_m);
}

TimeSeries::Sample TimeSeries::row(std::size_t k) const {
  return {t[k], sup_u[k], l2_ux[k], mass[k], energy[k], delta_E[k],
          v_x[k], xmax[k], ymax[k], x_m[k], y_m[k]};
}

void TimeSeries::extend(const TimeSeries& other) {
  // A restart segment repeats its initial time; keep the earlier sample.
  for (std::size_t k = 0; k < other.size(); ++k)
    if (t.empty() || other.t[k] > t.back()) append(other.row(k));
}

const std::vector<std::string>& TimeSeries::column_names() {
  static const std::vector<std::string> names{"t",      "sup_u", "l2_ux", "mass", "energy", "delta_E",
                                              "v_x",    "xmax",  "ymax",  "x_m",  "y_m"};
  return names;
}

const std::vector<double>& TimeSeries::column(const std::string& name) const {
  const std::vector<double>* cols[] = {&t,   &sup_u, &l2_ux, &mass, &energy, &delta_E,
                                       &v_x, &xmax,  &ymax,  &x_m,  &y_m};
  const auto& names = column_names();
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return *cols[k];
  throw ContractViolation("unknown time-series column '" + name + "'");
}

void TimeSeries::write_csv(std::ostream& os) const {
  os << fmt::format("# p={}\n# nx={}\n# ny={}\n# lx={}\n# ly={}\n# frame={}\n# run_id={}\n", meta.p, meta.nx,
                    meta.ny, meta.lx, meta.ly, meta.frame, meta.run_id);
  const auto& names = column_names();
  for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
  os << '\n';
  for (std::size_t k = 0; k < size(); ++k) {
    const Sample s = row(k);
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                      s.t, s.sup_u, s.l2_ux, s.mass, s.energy, s.delta_E, s.v_x, s.xmax, s.ymax, s.x_m, s.y_m);
  }
}

TimeSeries TimeSeries::read_csv(std::istream& is) {
  TimeSeries ts;
  std::string line;
  for (;;) {
    if (!std::getline(is, line)) throw IoError("time series: empty input");
    if (line.empty() || line[0] != '#') break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(1, eq - 1);
    key.erase(0, key.find_first_not_of(' '));
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "p") ts.meta.p = std::stoi(val);
      else if (key == "nx") ts.meta.nx = std::stoi(val);
      else if (key == "ny") ts.meta.ny = std::stoi(val);
      else if (key == "lx") ts.meta.lx = std::stod(val);
      else if (key == "ly") ts.meta.ly = std::stod(val);
      else if (key == "frame") ts.meta.frame = val;
      else if (key == "run_id") ts.meta.run_id = val;
    } catch (const std::exception&) {
      throw IoError("time series: bad metadata line '" + line + "'");
    }
  }
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) {
      while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
      header.push_back(name);
    }
  }
  const auto& names = column_names();
  std::vector<int> slot(header.size(), -1);
  for (std::size_t h = 0; h < header.size(); ++h)
    for (std::size_t c = 0; c < names.size(); ++c)
      if (header[h] == names[c]) slot[h] = int(c);
  if (std::find(slot.begin(), slot.end(), 0) == slot.end())
    throw IoError("time series: missing 't' column");

  std::vector<double>* cols[] = {&ts.t,   &ts.sup_u, &ts.l2_ux, &ts.mass, &ts.energy, &ts.delta_E,
                                 &ts.v_x, &ts.xmax,  &ts.ymax,  &ts.x_m,  &ts.y_m};
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row(names.size(), 0.0);
    for (std::size_t h = 0; h < header.size() && std::getline(ss, cell, ','); ++h) {
      if (slot[h] < 0) continue;
      try {
        row[slot[h]] = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("time series: bad number '" + cell + "'");
      }
    }
    if (!ts.t.empty() && !(row[0] > ts.t.back())) throw IoError("time series: t not strictly increasing");
    for (std::size_t c = 0; c < names.size(); ++c) cols[c]->push_back(row[c]);
  }
  return ts;
}

}  // namespace zk
