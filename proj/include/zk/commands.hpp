#pragma once

// Command implementations behind the zk2d tool. Each writes its files and
// returns what it computed; exit-code mapping lives in exit_code().

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zk/blowup.hpp"
#include "zk/evolution.hpp"
#include "zk/io.hpp"

namespace zk {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_solver = 3 };
/// 2 for config/IO/contract errors, 3 for solver failures.
int exit_code(const std::exception& e);

struct SolitonReport {
  SolitonProfile q;
  double q00;
  double tail;
  std::filesystem::path file;
  std::string text;
};
/// Writes <out>/soliton.zk2d and <out>/soliton.txt.
SolitonReport cmd_soliton(int p, double c, const GridSpec& g, double tol, const std::filesystem::path& out);

struct EvolveReport {
  std::filesystem::path dir;
  RunResult result;
  double wall_seconds;
  TimeSeries full_series;  ///< including earlier segments for restarts
  std::optional<std::filesystem::path> restart_dir;
};

/// Runs a config and writes config.ini, series.csv, snapshots, manifest.json
/// into its output directory. A [restart] section continues the run on the
/// refined grid in <dir>/restart when no breakdown occurred.
EvolveReport cmd_evolve(const RunConfig& c, std::ostream* log = nullptr);

/// Continues the run stored in `run_dir` (its config.ini and final.zk2d) on a
/// grid refined by `spec.refine`; the energy baseline is reset.
/// `snapshot` overrides the starting snapshot, `out` the output directory.
EvolveReport cmd_restart(const std::filesystem::path& run_dir, const RestartSpec& spec,
                         const std::vector<std::string>& overrides = {},
                         const std::optional<std::filesystem::path>& snapshot = std::nullopt,
                         const std::optional<std::filesystem::path>& out = std::nullopt, std::ostream* log = nullptr);

struct FitRequest {
  std::vector<std::string> columns{"sup_u", "l2_ux"};  ///< "L" fits the rescaling length
  std::vector<std::size_t> windows{500};
  FitMethod method = FitMethod::profiled;
  std::optional<double> q_sup;  ///< needed for "L"
  std::optional<std::filesystem::path> out;  ///< prefix for report/curve files
};
struct FitOutcome {
  std::string column;
  std::size_t window;
  std::optional<FitResult> fit;
  std::string error;
};
std::vector<FitOutcome> cmd_fit(const std::filesystem::path& series_csv, const FitRequest& req, std::ostream& report);

struct ResidualReport {
  ResidualResult result;
  ResidualLevels levels;
  double sup;
  std::string text;
};
ResidualReport cmd_residual(const std::filesystem::path& snapshot, const std::filesystem::path& soliton,
                            const std::filesystem::path& out, double core_radius = 1.0, double outer_radius = 4.0);

void cmd_scenarios_list(std::ostream& os);

/// Initial field for a config (scenario or snapshot).
Field initial_field(const RunConfig& c, std::vector<std::string>* warnings = nullptr);

}  // namespace zk
