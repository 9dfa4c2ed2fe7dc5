#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "zk/commands.hpp"
#include "zk/errors.hpp"

using namespace zk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "zk2d_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string bytes(const fs::path& p) { return read_text(p); }

double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

RunConfig small_run(const fs::path& out) {
  RunConfig c;
  c.p = 2;
  c.nx = c.ny = 64;
  c.lx = c.ly = 2;
  c.horizon = 0.2;
  c.steps = 200;
  c.scenario = ScenarioSpec::aniso_gaussian(1.5, 2.0);
  c.output = out.string();
  c.run_id = "small";
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.p = 4;
  c.nx = 128;
  c.ny = 64;
  c.lx = 2.0 / 3.0;
  c.ly = std::sqrt(2.0);
  c.frame = FrameSpec::tracking(0.1);
  c.horizon = 0.1;
  c.steps = 777;
  c.scenario = ScenarioSpec::two_solitons({2.0, -1.0 / 3.0, 0.2}, {1.0, 0.7, -0.1});
  c.scenario.wall = WallVariant::literal;
  c.record_every = 3;
  c.snapshot_times = {0.01, 0.05, 1.0 / 30.0};
  c.breakdown.tail_max = 3e-3;
  c.restart = RestartSpec{2, 5000, std::nullopt};
  const std::string ini = to_ini(c);
  const RunConfig d = parse_config(ini);
  CHECK(to_ini(d) == ini);
  CHECK(d.lx == c.lx);
  CHECK(d.ly == c.ly);
  CHECK(d.scenario.first.x == c.scenario.first.x);
  CHECK(d.snapshot_times == c.snapshot_times);
  CHECK(d.frame.kind == FrameSpec::Kind::tracking);
  CHECK(d.frame.x0 == 0.1);
  REQUIRE(d.restart);
  CHECK(d.restart->steps == 5000);
  CHECK_FALSE(d.restart->horizon);
}

TEST_CASE("config overrides, defaults and errors") {
  const RunConfig c = parse_config("[grid]\nnx = 32\nlx = 3\n[time]\nhorizon = 1\nh = 0.01\n", {"run.p=2", "frame.kind=constant", "frame.v=1.5"});
  CHECK(c.ny == 32);
  CHECK(c.ly == 3);
  CHECK(c.steps == 100);
  CHECK(c.p == 2);
  CHECK(c.frame.kind == FrameSpec::Kind::constant);
  CHECK(c.frame.v == 1.5);

  CHECK_THROWS_AS(parse_config("[grid]\nnx = 33\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nlx = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nlx = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nnz = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh]\nnx = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[time]\nhorizon = 1\nh = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[time]\nhorizon = nan\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[frame]\nkind = rotating\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("", {"p=3"}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/zk.ini"), ConfigError);
}

TEST_CASE("snapshot round trip is bit exact") {
  const fs::path dir = scratch("snap");
  const GridSpec g(16, 8, 1.5, 0.5);
  Field f = sample(g, [](double x, double y) { return std::sin(3 * x) * std::exp(y) / 7.0; });
  f(3, 2) = -0.0;
  f(4, 4) = 5e-310;  // subnormal
  const SnapshotHeader h{3, 16, 8, 1.5, 0.5, 0.125, -2.5, 1.0 / 3.0, -1e-9};
  write_snapshot(dir / "a.zk2d", h, f);
  const SnapshotFile s = read_snapshot(dir / "a.zk2d");
  CHECK(std::memcmp(s.field.values.data(), f.values.data(), 8 * f.values.size()) == 0);
  CHECK(s.header.p == 3);
  CHECK(s.header.t == 0.125);
  CHECK(s.header.x_m == 1.0 / 3.0);
  CHECK(s.header.y_m == -1e-9);
  CHECK(s.header.v == -2.5);
  CHECK(s.field.grid == g);
  CHECK(fs::file_size(dir / "a.zk2d") == 64 + 8 * 16 * 8);
  // header bytes
  const std::string b = bytes(dir / "a.zk2d");
  CHECK(b.substr(0, 4) == "ZK2D");
  CHECK(static_cast<unsigned char>(b[8]) == 16);

  // spectral coefficients of the reread field are identical too
  const SpectralField A = forward(f), B = forward(s.field);
  CHECK(std::memcmp(A.half.data(), B.half.data(), sizeof(Complex) * A.half.size()) == 0);

  write_text(dir / "bad.zk2d", b.substr(0, 100));
  CHECK_THROWS_AS(read_snapshot(dir / "bad.zk2d"), IoError);
  write_text(dir / "junk.zk2d", std::string(200, 'x'));
  CHECK_THROWS_AS(read_snapshot(dir / "junk.zk2d"), IoError);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.zk2d"), IoError);
  CHECK_THROWS_AS(read_soliton(dir / "a.zk2d"), IoError);
}

TEST_CASE("soliton command") {
  const fs::path dir = scratch("soliton");
  const GridSpec g(128, 128, 10, 10);
  const SolitonReport a = cmd_soliton(3, 1.0, g, 1e-10, dir / "a");
  CHECK(a.q.residual_sup < 1e-10);
  CHECK(a.text.find("Q00 = ") != std::string::npos);
  CHECK(a.text.find("tail_indicator = ") != std::string::npos);
  const SolitonReport b = cmd_soliton(3, 1.0, g, 1e-10, dir / "b");
  CHECK(bytes(a.file) == bytes(b.file));

  const SolitonProfile q = read_soliton(a.file);
  CHECK(q.p == 3);
  CHECK(q.c == 1.0);
  CHECK(q.residual_sup == a.q.residual_sup);
  CHECK(sup_diff(q.field, a.q.field) == 0.0);
}

TEST_CASE("evolve writes a complete run directory") {
  const fs::path dir = scratch("evolve");
  RunConfig c = small_run(dir / "run");
  c.snapshot_times = {0.1};
  const EvolveReport r = cmd_evolve(c);
  for (const char* f : {"config.ini", "series.csv", "snap_000.zk2d", "final.zk2d", "manifest.json"})
    CHECK(fs::exists(r.dir / f));
  CHECK_FALSE(r.result.breakdown);
  CHECK(r.result.max_delta_E < 1e-10);
  CHECK(r.result.max_mass_drift < 1e-10);
  const std::string m = bytes(r.dir / "manifest.json");
  CHECK(m.find("\"broke_down\": false") != std::string::npos);
  CHECK(m.find("\"max_delta_E\"") != std::string::npos);
  CHECK(m.find("\"wall_clock_seconds\"") != std::string::npos);
  CHECK(m.find("\"final_tail_indicator\"") != std::string::npos);

  // the stored config reproduces the run
  RunConfig again = load_config(r.dir / "config.ini");
  again.output = (dir / "again").string();
  const EvolveReport r2 = cmd_evolve(again);
  CHECK(bytes(r.dir / "final.zk2d") == bytes(r2.dir / "final.zk2d"));
  CHECK(bytes(r.dir / "series.csv").size() > 0);
  std::ifstream in(r.dir / "series.csv");
  const TimeSeries s = TimeSeries::read_csv(in);
  CHECK(s.meta.p == 2);
  CHECK(s.t.back() == doctest::Approx(0.2));
}

TEST_CASE("restart with factor 1 equals an unbroken run") {
  const fs::path dir = scratch("restart1");
  RunConfig whole = small_run(dir / "whole");
  whole.horizon = 0.4;
  whole.steps = 400;
  const EvolveReport w = cmd_evolve(whole);

  const EvolveReport first = cmd_evolve(small_run(dir / "first"));
  const EvolveReport second = cmd_restart(first.dir, RestartSpec{1, 200, 0.2});
  CHECK(second.dir == first.dir / "restart");
  const Field a = read_snapshot(w.dir / "final.zk2d").field;
  const SnapshotFile b = read_snapshot(second.dir / "final.zk2d");
  CHECK(sup_diff(a, b.field) < 1e-10);
  CHECK(b.header.t == doctest::Approx(0.4));
  CHECK(fs::exists(second.dir / "series_full.csv"));
  CHECK(second.full_series.size() > second.result.series.size());
}

TEST_CASE("restart with refinement") {
  const fs::path dir = scratch("restart2");
  const SolitonReport q = cmd_soliton(2, 1.0, GridSpec(64, 64, 4, 4), 1e-10, dir / "q");
  RunConfig c;
  c.p = 2;
  c.nx = c.ny = 64;
  c.lx = c.ly = 4;
  c.frame = FrameSpec::constant(1.0);
  c.horizon = 0.05;
  c.steps = 50;
  c.soliton = q.file.string();
  c.output = (dir / "run").string();
  c.restart = RestartSpec{2, 50, 0.05};
  const EvolveReport r = cmd_evolve(c);
  REQUIRE(r.restart_dir);
  const SnapshotFile before = read_snapshot(dir / "run" / "final.zk2d");
  const SnapshotFile after = read_snapshot(*r.restart_dir / "final.zk2d");
  CHECK(after.header.nx == 128);
  CHECK(after.header.t == doctest::Approx(0.1));
  // the refined continuation starts from the padded field, whose tail is lower
  const SpectralField padded = refine(forward(before.field), 2);
  CHECK(tail_indicator(padded) < tail_indicator(forward(before.field)));
  const RunConfig rc = load_config(*r.restart_dir / "config.ini");
  CHECK(rc.nx == 128);
  CHECK_FALSE(rc.restart);
}

TEST_CASE("fit command") {
  const fs::path dir = scratch("fit");
  TimeSeries s;
  s.meta.p = 3;
  for (int k = 0; k < 600; ++k) {
    TimeSeries::Sample smp{};
    smp.t = 0.5 * k / 600.0;
    smp.sup_u = std::exp(1.2) * std::pow(0.56 - smp.t, -0.5);
    smp.l2_ux = std::exp(0.3) * std::pow(0.56 - smp.t, -0.52);
    smp.mass = 1.0;
    s.append(smp);
  }
  {
    std::ofstream out(dir / "series.csv");
    s.write_csv(out);
  }
  FitRequest req;
  req.windows = {250, 500, 1000};
  req.columns = {"sup_u", "l2_ux", "L"};
  req.q_sup = 2.0;
  req.out = dir / "fit";
  std::ostringstream rep;
  const auto out = cmd_fit(dir / "series.csv", req, rep);
  REQUIRE(out.size() == 9);
  REQUIRE(out[1].fit);
  CHECK(std::abs(out[1].fit->a + 0.5) < 1e-6);
  CHECK(std::abs(out[1].fit->t_star - 0.56) < 1e-6);
  CHECK_FALSE(out[2].fit);  // 1000 > 600 samples
  REQUIRE(out[7].fit);
  CHECK(std::abs(out[7].fit->a - 0.5) < 1e-6);  // L = (2 / sup)^1
  CHECK(fs::exists(dir / "fit_sup_u_500.txt"));
  CHECK(fs::exists(dir / "fit_sup_u_500.csv"));
  CHECK(rep.str().find("series = l2_ux") != std::string::npos);

  req.columns = {"nope"};
  CHECK_THROWS_AS(cmd_fit(dir / "series.csv", req, rep), ContractViolation);
}

TEST_CASE("residual command") {
  const fs::path dir = scratch("residual");
  const SolitonReport q = cmd_soliton(2, 1.0, GridSpec(256, 256, 8, 8), 1e-10, dir / "q");
  const GridSpec& g = q.q.field.grid;
  write_snapshot(dir / "f.zk2d", {2, g.nx(), g.ny(), g.lx(), g.ly(), 0.0, 0.0, 0.0, 0.0}, q.q.field);
  const ResidualReport r = cmd_residual(dir / "f.zk2d", q.file, dir / "res.zk2d");
  CHECK(r.sup < 1e-8);
  CHECK(std::abs(r.result.c_fit - 1.0) < 1e-10);
  CHECK(fs::exists(dir / "res.zk2d"));
  CHECK(fs::exists(dir / "res.txt"));
  CHECK(r.text.find("c_fit = ") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ConfigError("x")) == 2);
  CHECK(exit_code(IoError("x")) == 2);
  CHECK(exit_code(IterationFailure("x", 1.0)) == 3);
  CHECK(exit_code(ResolutionError("x")) == 3);
  CHECK(exit_code(NoBlowUp("x")) == 3);
}

TEST_CASE("output root follows the environment") {
  setenv("ZK2D_OUTPUT_ROOT", "/tmp/zk_root", 1);
  RunConfig c;
  c.run_id = "abc";
  CHECK(output_dir(c) == fs::path("/tmp/zk_root/abc"));
  unsetenv("ZK2D_OUTPUT_ROOT");
  CHECK(output_dir(c) == fs::path("runs/abc"));
  c.output = "/x/y";
  CHECK(output_dir(c) == fs::path("/x/y"));
}
