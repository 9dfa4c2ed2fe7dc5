#pragma once

// Files: binary snapshots, INI run configs, JSON manifests.
//
// Snapshot layout (little-endian):
//   0  char[4]  "ZK2D"
//   4  u16      format version
//   6  u16      p
//   8  u32      nx
//   12 u32      ny
//   16 f64      lx, ly, t, v, x_m, y_m
//   64 f64      nx * ny samples, row-major (x along rows)
// Soliton files append "ZKSL", u32 0, f64 c, f64 residual_sup.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zk/evolution.hpp"
#include "zk/grid.hpp"
#include "zk/scenarios.hpp"
#include "zk/soliton.hpp"

namespace zk {

inline constexpr std::uint16_t snapshot_version = 1;

struct SnapshotHeader {
  int p = 0;
  int nx = 0, ny = 0;
  double lx = 0, ly = 0, t = 0;
  double v = 0;  ///< frame velocity (v_x for tracking, c for solitons)
  double x_m = 0, y_m = 0;
};

struct SnapshotFile {
  SnapshotHeader header;
  Field field;
};

void write_snapshot(const std::filesystem::path& path, const SnapshotHeader& h, const Field& f);
SnapshotFile read_snapshot(const std::filesystem::path& path);

void write_soliton(const std::filesystem::path& path, const SolitonProfile& q);
SolitonProfile read_soliton(const std::filesystem::path& path);

struct RestartSpec {
  int refine = 1;
  std::optional<long> steps;
  std::optional<double> horizon;
};

struct RunConfig {
  int p = 3;
  std::string run_id = "run";
  std::string output;  ///< empty: default output root / run_id

  int nx = 256, ny = 256;
  double lx = 10, ly = 10;

  FrameSpec frame;

  double horizon = 1.0;
  long steps = 1000;

  ScenarioSpec scenario;
  std::string snapshot;  ///< initial data from a snapshot instead of a scenario
  std::string soliton;   ///< precomputed c = 1 profile for soliton scenarios

  long record_every = 0;
  std::vector<double> snapshot_times;

  BreakdownPolicy breakdown;

  std::optional<RestartSpec> restart;

  GridSpec grid() const { return GridSpec(nx, ny, lx, ly); }
  double h() const { return horizon / double(steps); }
  /// Throws ConfigError on any invalid field.
  void validate() const;
};

std::string to_ini(const RunConfig& c);
/// `overrides` are "section.key=value" strings applied after the text.
RunConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Default output root: $ZK2D_OUTPUT_ROOT, else ./runs.
std::filesystem::path output_root();
std::filesystem::path output_dir(const RunConfig& c);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace zk
