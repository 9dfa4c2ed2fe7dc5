#include "zk/commands.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "zk/diagnostics.hpp"
#include "zk/errors.hpp"
#include "zk/scenarios.hpp"

namespace zk {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const ContractViolation*>(&e))
    return exit_config;
  return exit_solver;
}

namespace {

std::string frame_kind(const FrameSpec& f) {
  switch (f.kind) {
    case FrameSpec::Kind::lab: return "lab";
    case FrameSpec::Kind::constant: return "constant";
    case FrameSpec::Kind::tracking: return "tracking";
  }
  return "?";
}

SnapshotHeader header_of(const Snapshot& s, int p) {
  const GridSpec& g = s.field.grid;
  return {p, g.nx(), g.ny(), g.lx(), g.ly(), s.t, s.v_x, s.x_m, s.y_m};
}

RunPlan plan_of(const RunConfig& c) {
  RunPlan pl;
  pl.p = c.p;
  pl.frame = c.frame;
  pl.horizon = c.horizon;
  pl.steps = c.steps;
  pl.record_every = c.record_every;
  pl.snapshot_times = c.snapshot_times;
  pl.breakdown = c.breakdown;
  pl.run_id = c.run_id;
  return pl;
}

void write_series(const fs::path& path, const TimeSeries& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  s.write_csv(out);
}

json config_json(const RunConfig& c) {
  return {{"p", c.p},
          {"run_id", c.run_id},
          {"grid", {{"nx", c.nx}, {"ny", c.ny}, {"lx", c.lx}, {"ly", c.ly}}},
          {"frame", {{"kind", frame_kind(c.frame)}, {"v", c.frame.v}, {"x0", c.frame.x0}}},
          {"time", {{"horizon", c.horizon}, {"steps", c.steps}, {"h", c.h()}}},
          {"scenario", c.snapshot.empty() ? json(to_string(c.scenario.kind)) : json("snapshot:" + c.snapshot)},
          {"breakdown",
           {{"enabled", c.breakdown.enabled}, {"tail_max", c.breakdown.tail_max}, {"energy_max", c.breakdown.energy_max}}},
          {"ini", to_ini(c)}};
}

// Runs one segment from `state` and writes everything into `dir`.
EvolveReport run_segment(const RunConfig& c, EvolutionState state, const fs::path& dir, const TimeSeries* earlier,
                         const std::vector<std::string>& warnings, std::ostream* log) {
  fs::create_directories(dir);
  write_text(dir / "config.ini", to_ini(c));

  RunPlan pl = plan_of(c);
  const long every = pl.record_every > 0 ? pl.record_every : std::max(1L, pl.steps / 2000);
  const long report_every = std::max(1L, pl.steps / (10 * every));
  long recorded = 0;
  if (log)
    pl.on_record = [&](const EvolutionState& s, const TimeSeries::Sample& smp) {
      if (recorded++ % report_every == 0)
        *log << fmt::format("t = {:.6f}  sup = {:.6g}  dE = {:.2e}  v_x = {:.4g}\n", s.t, smp.sup_u, smp.delta_E, smp.v_x)
             << std::flush;
    };

  const auto t0 = std::chrono::steady_clock::now();
  RunResult r = evolve(std::move(state), pl);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_series(dir / "series.csv", r.series);
  TimeSeries full = r.series;
  if (earlier) {
    full = *earlier;
    full.meta = r.series.meta;
    full.extend(r.series);
    write_series(dir / "series_full.csv", full);
  }
  json snaps = json::array();
  for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
    const bool last = k + 1 == r.snapshots.size();
    const std::string name = last ? "final.zk2d" : fmt::format("snap_{:03d}.zk2d", k);
    write_snapshot(dir / name, header_of(r.snapshots[k], c.p), r.snapshots[k].field);
    snaps.push_back({{"file", name}, {"t", r.snapshots[k].t}});
  }

  json m = {{"config", config_json(c)},
            {"config_file", "config.ini"},
            {"series_file", "series.csv"},
            {"wall_clock_seconds", wall},
            {"steps_taken", r.steps_taken},
            {"t_end", r.series.size() ? r.series.t.back() : 0.0},
            {"final_tail_indicator", r.final_tail},
            {"max_delta_E", r.max_delta_E},
            {"max_mass_drift", r.max_mass_drift},
            {"snapshots", snaps},
            {"warnings", warnings},
            {"breakdown", nullptr},
            {"broke_down", bool(r.breakdown)}};
  if (r.breakdown) m["breakdown"] = {{"t", r.breakdown->t}, {"step", r.breakdown->step}, {"cause", r.breakdown->cause}};
  if (r.error) m["error"] = *r.error;
  if (earlier) m["series_full_file"] = "series_full.csv";
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  if (log) {
    *log << fmt::format("{}: {} steps, t = {:.6f}, max dE = {:.2e}, tail = {:.2e}", dir.string(), r.steps_taken,
                        r.series.size() ? r.series.t.back() : 0.0, r.max_delta_E, r.final_tail);
    if (r.breakdown) *log << fmt::format(", breakdown ({}) at t = {:.6f}", r.breakdown->cause, r.breakdown->t);
    *log << "\n";
  }
  return {dir, std::move(r), wall, std::move(full), std::nullopt};
}

EvolutionState state_from_snapshot(const SnapshotFile& s, const FrameSpec& frame, int refine_factor) {
  SpectralField F = forward(s.field);
  if (refine_factor > 1) F = refine(F, refine_factor);
  EvolutionState st(std::move(F), frame);
  st.t = s.header.t;
  st.v_x = s.header.v;
  st.x_m = s.header.x_m;
  st.y_m = s.header.y_m;
  st.touch();
  return st;
}

std::string peak_report(const SolitonProfile& q, double q00, double tail) {
  return fmt::format("p = {}\nc = {:.17g}\nnx = {}\nny = {}\nlx = {:.17g}\nly = {:.17g}\nQ00 = {:.17g}\n"
                     "residual_sup = {:.6e}\ntail_indicator = {:.6e}\nmass = {:.17g}\nenergy = {:.17g}\n",
                     q.p, q.c, q.field.grid.nx(), q.field.grid.ny(), q.field.grid.lx(), q.field.grid.ly(), q00,
                     q.residual_sup, tail, mass(q.field), energy(q.field, q.p));
}

}  // namespace

Field initial_field(const RunConfig& c, std::vector<std::string>* warnings) {
  const GridSpec g = c.grid();
  if (!c.snapshot.empty()) {
    SnapshotFile s = read_snapshot(c.snapshot);
    if (!(s.field.grid == g))
      throw ConfigError(fmt::format("snapshot {} is {}x{} on lx = {}, config grid is {}x{} on lx = {}", c.snapshot,
                                    s.field.grid.nx(), s.field.grid.ny(), s.field.grid.lx(), g.nx(), g.ny(), g.lx()));
    return std::move(s.field);
  }
  std::optional<SolitonProfile> q;
  if (!c.soliton.empty() && c.scenario.uses_soliton()) q = read_soliton(c.soliton);
  return build(c.scenario, g, c.p, q ? &*q : nullptr, warnings);
}

SolitonReport cmd_soliton(int p, double c, const GridSpec& g, double tol, const fs::path& out) {
  NewtonOptions opts;
  opts.tol = tol;
  SolitonProfile q = solve_ground_state(p, c, g, opts);
  const double q00 = q.field(g.nx() / 2, g.ny() / 2);
  const double tail = tail_indicator(forward(q.field));
  fs::create_directories(out);
  const fs::path file = out / "soliton.zk2d";
  write_soliton(file, q);
  std::string text = peak_report(q, q00, tail);
  text += fmt::format("newton_iterations = {}\n", q.history.size());
  write_text(out / "soliton.txt", text);
  return {std::move(q), q00, tail, file, std::move(text)};
}

EvolveReport cmd_evolve(const RunConfig& c, std::ostream* log) {
  c.validate();
  std::vector<std::string> warnings;
  EvolutionState st(c.grid());
  if (!c.snapshot.empty()) {
    // continue from the stored time and frame displacement
    const SnapshotFile s = read_snapshot(c.snapshot);
    if (!(s.field.grid == c.grid())) throw ConfigError("snapshot grid differs from the config grid");
    st = state_from_snapshot(s, c.frame, 1);
  } else {
    st = initial_state(initial_field(c, &warnings), c.frame);
  }
  for (const auto& w : warnings)
    if (log) *log << "warning: " << w << "\n";
  const fs::path dir = output_dir(c);
  EvolveReport rep = run_segment(c, std::move(st), dir, nullptr, warnings, log);
  if (c.restart && !rep.result.breakdown) {
    EvolveReport next = cmd_restart(dir, *c.restart, {}, std::nullopt, dir / "restart", log);
    next.restart_dir = next.dir;
    return next;
  }
  return rep;
}

EvolveReport cmd_restart(const fs::path& run_dir, const RestartSpec& spec, const std::vector<std::string>& overrides,
                         const std::optional<fs::path>& snapshot, const std::optional<fs::path>& out, std::ostream* log) {
  if (spec.refine < 1) throw ConfigError("refine factor must be >= 1");
  RunConfig c = load_config(run_dir / "config.ini", overrides);
  const SnapshotFile s = read_snapshot(snapshot ? *snapshot : run_dir / "final.zk2d");
  if (s.header.p != c.p) throw ConfigError("snapshot p differs from the run config");

  c.nx = s.header.nx * spec.refine;
  c.ny = s.header.ny * spec.refine;
  c.lx = s.header.lx;
  c.ly = s.header.ly;
  if (spec.steps) c.steps = *spec.steps;
  if (spec.horizon) c.horizon = *spec.horizon;
  c.run_id += fmt::format("_restart{}", spec.refine);
  c.snapshot.clear();
  c.restart.reset();
  // requested snapshots of the earlier segment are already written
  std::erase_if(c.snapshot_times, [&](double t) { return t < s.header.t; });
  c.output = out ? out->string() : (run_dir / "restart").string();
  c.validate();

  std::optional<TimeSeries> earlier;
  for (const char* name : {"series_full.csv", "series.csv"})
    if (fs::exists(run_dir / name)) {
      std::ifstream in(run_dir / name);
      earlier = TimeSeries::read_csv(in);
      break;
    }
  EvolveReport rep =
      run_segment(c, state_from_snapshot(s, c.frame, spec.refine), c.output, earlier ? &*earlier : nullptr, {}, log);
  return rep;
}

std::vector<FitOutcome> cmd_fit(const fs::path& series_csv, const FitRequest& req, std::ostream& report) {
  std::ifstream in(series_csv);
  if (!in) throw IoError("cannot open " + series_csv.string());
  const TimeSeries s = TimeSeries::read_csv(in);
  std::vector<FitOutcome> out;
  for (const std::string& col : req.columns) {
    std::vector<double> t = s.t, g;
    if (col == "L") {
      if (!req.q_sup) throw ConfigError("fitting L needs the soliton peak value (--q-sup)");
      if (s.meta.p == 0) throw ConfigError("series has no p in its metadata");
      const RescaleTrace tr = estimate_L(s, s.meta.p, *req.q_sup);
      g = tr.L;
    } else {
      g = s.column(col);
    }
    for (std::size_t w : req.windows) {
      FitOutcome o{col, w, std::nullopt, ""};
      if (w > t.size()) {
        o.error = fmt::format("window {} exceeds the {} recorded samples", w, t.size());
        report << fmt::format("series = {}\nwindow = {}\nerror = {}\n\n", col, w, o.error);
        out.push_back(std::move(o));
        continue;
      }
      try {
        const std::size_t win = w;
        FitResult r = fit_power_law(t, g, win, req.method, col);
        write_fit_report(report, r);
        report << "\n";
        if (req.out) {
          const std::string stem = fmt::format("{}_{}_{}", req.out->string(), col, win);
          std::ostringstream rep, curve;
          write_fit_report(rep, r);
          write_fit_curve(curve, r, t, g);
          write_text(stem + ".txt", rep.str());
          write_text(stem + ".csv", curve.str());
        }
        o.fit = r;
      } catch (const Error& e) {
        if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ContractViolation*>(&e)) throw;
        o.error = e.what();
        report << fmt::format("series = {}\nwindow = {}\nerror = {}\n\n", col, w, e.what());
      }
      out.push_back(std::move(o));
    }
  }
  return out;
}

ResidualReport cmd_residual(const fs::path& snapshot, const fs::path& soliton, const fs::path& out, double core_radius,
                            double outer_radius) {
  const SnapshotFile s = read_snapshot(snapshot);
  const SolitonProfile q = read_soliton(soliton);
  if (q.p != s.header.p) throw ConfigError("soliton p differs from the snapshot");
  ResidualResult r = extract_residual(s.field, q);
  const ResidualLevels lv = residual_levels(r, core_radius, outer_radius);
  double sup = 0;
  for (double v : r.residual.values) sup = std::max(sup, std::abs(v));
  SnapshotHeader h = s.header;
  write_snapshot(out, h, r.residual);
  std::string text = fmt::format("t = {:.17g}\nc_fit = {:.17g}\ncenter_x = {:.17g}\ncenter_y = {:.17g}\n"
                                 "residual_sup = {:.6e}\ncore_radius = {}\ncore_sup = {:.6e}\nouter_radius = {}\n"
                                 "ambient_sup = {:.6e}\ncore_to_ambient = {:.6g}\n",
                                 s.header.t, r.c_fit, r.xc, r.yc, sup, core_radius, lv.core, outer_radius, lv.ambient,
                                 lv.ambient > 0 ? lv.core / lv.ambient : 0.0);
  fs::path txt = out;
  txt.replace_extension(".txt");
  write_text(txt, text);
  return {std::move(r), lv, sup, std::move(text)};
}

void cmd_scenarios_list(std::ostream& os) {
  os << "kinds:\n"
        "  lambda_soliton  lambda * Q                                   [scenario] lambda\n"
        "  two_solitons    Q_c1(x - x1, y - y1) + Q_c2(x - x2, y - y2)  [scenario] c1 x1 y1 c2 x2 y2\n"
        "  y_pair          Q(x, y - a) + Q(x, y + a)                    [scenario] a\n"
        "  gaussian        lambda e^{-(x^2 + y^2)}                      [scenario] lambda\n"
        "  aniso_gaussian  lambda e^{-(x^2 + epsilon y^2)}              [scenario] lambda epsilon\n"
        "  wall            ridge of height amplitude                    [scenario] amplitude wall=ridge_y|literal\n"
        "\npresets:\n";
  for (const auto& p : scenario_presets())
    os << fmt::format("  {:<18} p = {}  lx = {:<4} {:<15} {}\n", p.name, p.p, p.lx, to_string(p.spec.kind), p.note);
}

}  // namespace zk
