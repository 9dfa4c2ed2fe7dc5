// zk2d: ground states, evolution runs, restarts and post-processing.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "zk/commands.hpp"
#include "zk/errors.hpp"

using namespace zk;

namespace {

// command-line flags that map onto config keys
struct RunFlags {
  std::optional<int> p, nx, ny;
  std::optional<double> lx, ly, v, x0, horizon, h, lambda;
  std::optional<long> steps, record_every;
  std::optional<std::string> frame, scenario, snapshot_times, out, id, soliton, preset;
  std::vector<std::string> set;

  void add(CLI::App* cmd) {
    cmd->add_option("--p", p, "nonlinearity power (2, 3, 4)");
    cmd->add_option("--nx", nx, "modes in x");
    cmd->add_option("--ny", ny, "modes in y");
    cmd->add_option("--lx", lx, "box is lx[-pi, pi) in x");
    cmd->add_option("--ly", ly, "box is ly[-pi, pi) in y");
    cmd->add_option("--frame", frame, "lab | constant | tracking");
    cmd->add_option("--v", v, "constant frame speed");
    cmd->add_option("--x0", x0, "tracking: hold the maximum at (x0, 0)");
    cmd->add_option("--horizon", horizon, "integration time");
    cmd->add_option("--steps", steps, "time steps");
    cmd->add_option("--dt", h, "time step (alternative to --steps)");
    cmd->add_option("--scenario", scenario, "scenario kind");
    cmd->add_option("--preset", preset, "named scenario preset (sets p, lx and the scenario)");
    cmd->add_option("--lambda", lambda, "scenario factor / amplitude");
    cmd->add_option("--soliton", soliton, "precomputed c = 1 soliton file");
    cmd->add_option("--record-every", record_every, "steps between recorded samples (0: steps/2000)");
    cmd->add_option("--snapshot-times", snapshot_times, "comma-separated snapshot times");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--id", id, "run id");
    cmd->add_option("--set", set, "config override section.key=value")->take_all();
  }

  std::vector<std::string> overrides() const {
    std::vector<std::string> o;
    if (preset) {
      const auto pr = find_preset(*preset);
      if (!pr) throw ConfigError("unknown preset '" + *preset + "' (see: zk2d scenarios list)");
      const ScenarioSpec& s = pr->spec;
      o.push_back(fmt::format("run.p={}", pr->p));
      o.push_back(fmt::format("grid.lx={}", pr->lx));
      o.push_back(fmt::format("grid.ly={}", pr->lx));
      o.push_back("scenario.kind=" + to_string(s.kind));
      o.push_back(fmt::format("scenario.lambda={:.17g}", s.lambda));
      o.push_back(fmt::format("scenario.c1={:.17g}", s.first.c));
      o.push_back(fmt::format("scenario.x1={:.17g}", s.first.x));
      o.push_back(fmt::format("scenario.y1={:.17g}", s.first.y));
      o.push_back(fmt::format("scenario.c2={:.17g}", s.second.c));
      o.push_back(fmt::format("scenario.x2={:.17g}", s.second.x));
      o.push_back(fmt::format("scenario.y2={:.17g}", s.second.y));
      o.push_back(fmt::format("scenario.a={:.17g}", s.a));
      o.push_back(fmt::format("scenario.epsilon={:.17g}", s.epsilon));
      o.push_back(fmt::format("scenario.amplitude={:.17g}", s.amplitude));
      o.push_back("scenario.wall=" + to_string(s.wall));
      o.push_back("run.id=" + pr->name);
    }
    auto put = [&](const char* key, const auto& v) {
      if (v) o.push_back(fmt::format("{}={}", key, *v));
    };
    auto put_real = [&](const char* key, const std::optional<double>& v) {
      if (v) o.push_back(fmt::format("{}={:.17g}", key, *v));
    };
    put("run.p", p);
    put("grid.nx", nx);
    put("grid.ny", ny);
    put_real("grid.lx", lx);
    put_real("grid.ly", ly);
    if (lx && !ly) put_real("grid.ly", lx);
    if (nx && !ny) put("grid.ny", nx);
    put("frame.kind", frame);
    put_real("frame.v", v);
    put_real("frame.x0", x0);
    put_real("time.horizon", horizon);
    put("time.steps", steps);
    put_real("time.h", h);
    put("scenario.kind", scenario);
    put_real("scenario.lambda", lambda);
    put("scenario.soliton", soliton);
    put("record.every", record_every);
    put("record.snapshot_times", snapshot_times);
    put("run.output", out);
    put("run.id", id);
    o.insert(o.end(), set.begin(), set.end());
    return o;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"zk2d: pseudospectral generalized Zakharov-Kuznetsov runs"};
  app.require_subcommand(1);

  // soliton
  auto* sol = app.add_subcommand("soliton", "solve for the ground state Q_c");
  int sp = 3, snx = 512, sny = 0;
  double sc = 1.0, slx = 10, sly = 0, stol = 1e-10;
  std::string sout;
  sol->add_option("--p", sp, "nonlinearity power")->check(CLI::Range(2, 4));
  sol->add_option("--c", sc, "speed");
  sol->add_option("--nx", snx, "modes in x");
  sol->add_option("--ny", sny, "modes in y (default nx)");
  sol->add_option("--lx", slx, "box scale in x");
  sol->add_option("--ly", sly, "box scale in y (default lx)");
  sol->add_option("--tol", stol, "Newton tolerance on sup|residual|");
  sol->add_option("--out", sout, "output directory (default <output root>/soliton_p<p>)");

  // evolve
  auto* evo = app.add_subcommand("evolve", "integrate a run config");
  std::string config;
  RunFlags ef;
  evo->add_option("config", config, "INI run config (optional)");
  ef.add(evo);

  // restart
  auto* rst = app.add_subcommand("restart", "continue a finished run on a refined grid");
  std::string rdir, rsnap, rout;
  int refine = 2;
  std::optional<long> rsteps;
  std::optional<double> rhorizon;
  std::vector<std::string> rset;
  rst->add_option("run_dir", rdir, "directory of the earlier run")->required();
  rst->add_option("--refine", refine, "mode refinement factor");
  rst->add_option("--steps", rsteps, "time steps of the new segment");
  rst->add_option("--horizon", rhorizon, "integration time of the new segment");
  rst->add_option("--snapshot", rsnap, "start from this snapshot instead of final.zk2d");
  rst->add_option("--out", rout, "output directory (default <run_dir>/restart)");
  rst->add_option("--set", rset, "config override section.key=value")->take_all();

  // fit
  auto* fit = app.add_subcommand("fit", "power-law fits ln g = a ln(t* - t) + b of a recorded series");
  std::string fcsv, fmethod = "profiled", fout;
  std::vector<std::string> fcols;
  std::vector<std::size_t> fwin;
  std::optional<double> qsup;
  bool sweep = false;
  fit->add_option("series", fcsv, "series CSV")->required();
  fit->add_option("--column", fcols, "column(s) to fit; L = rescaling length (needs --q-sup)");
  fit->add_option("--window", fwin, "trailing samples (default 500)");
  fit->add_flag("--sweep", sweep, "windows 250, 500 and 1000");
  fit->add_option("--method", fmethod, "profiled | simplex");
  fit->add_option("--q-sup", qsup, "soliton peak value, for L");
  fit->add_option("--out", fout, "prefix for report and curve files");

  // residual
  auto* res = app.add_subcommand("residual", "difference to a fitted rescaled soliton");
  std::string rs_snap, rs_sol, rs_out;
  double core = 1.0, outer = 4.0;
  res->add_option("snapshot", rs_snap, "field snapshot")->required();
  res->add_option("soliton", rs_sol, "c = 1 soliton file")->required();
  res->add_option("--out", rs_out, "residual snapshot path (default <snapshot>.residual.zk2d)");
  res->add_option("--core", core, "core radius for the level report");
  res->add_option("--outer", outer, "radius beyond which the ambient level is taken");

  // scenarios
  auto* scn = app.add_subcommand("scenarios", "initial-data families");
  scn->add_subcommand("list", "list scenario kinds and presets");
  scn->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_config;
  }

  try {
    if (*sol) {
      const GridSpec g(snx, sny ? sny : snx, slx, sly > 0 ? sly : slx);
      const auto out = sout.empty() ? output_root() / fmt::format("soliton_p{}", sp) : std::filesystem::path(sout);
      const SolitonReport r = cmd_soliton(sp, sc, g, stol, out);
      std::cout << r.text << "file = " << r.file.string() << "\n";
    } else if (*evo) {
      const RunConfig c = config.empty() ? parse_config("", ef.overrides()) : load_config(config, ef.overrides());
      const EvolveReport r = cmd_evolve(c, &std::cerr);
      std::cout << "output = " << r.dir.string() << "\n";
      if (r.result.breakdown) std::cout << "breakdown = " << r.result.breakdown->cause << " t = " << r.result.breakdown->t << "\n";
    } else if (*rst) {
      RestartSpec spec{refine, rsteps, rhorizon};
      const auto r = cmd_restart(rdir, spec, rset, rsnap.empty() ? std::nullopt : std::optional<std::filesystem::path>(rsnap),
                                 rout.empty() ? std::nullopt : std::optional<std::filesystem::path>(rout), &std::cerr);
      std::cout << "output = " << r.dir.string() << "\n";
      if (r.result.breakdown) std::cout << "breakdown = " << r.result.breakdown->cause << " t = " << r.result.breakdown->t << "\n";
    } else if (*fit) {
      FitRequest req;
      if (!fcols.empty()) req.columns = fcols;
      if (sweep) req.windows = {250, 500, 1000};
      else if (!fwin.empty()) req.windows = fwin;
      req.method = parse_fit_method(fmethod);
      req.q_sup = qsup;
      if (!fout.empty()) req.out = fout;
      const auto outcomes = cmd_fit(fcsv, req, std::cout);
      for (const auto& o : outcomes)
        if (!o.fit) return exit_solver;
    } else if (*res) {
      const std::string out = rs_out.empty() ? rs_snap + ".residual.zk2d" : rs_out;
      const ResidualReport r = cmd_residual(rs_snap, rs_sol, out, core, outer);
      std::cout << r.text << "file = " << out << "\n";
    } else if (*scn) {
      cmd_scenarios_list(std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
