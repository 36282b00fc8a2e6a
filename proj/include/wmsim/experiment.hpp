#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wmsim/dispatch.hpp"
#include "wmsim/simulator.hpp"
#include "wmsim/system.hpp"

namespace wmsim {

namespace fs = std::filesystem;

/// File names of one run inside its output directory.
struct RunFiles {
  fs::path results;
  fs::path bench;
  fs::path summary;

  static RunFiles in(const fs::path& dir, const std::string& dispatcher);
};

/// Streams an SWF workload through a simulation and writes
/// `<dir>/<dispatcher>.{results.tsv,bench.tsv,summary.json}`. On failure
/// the TSVs get a "partial" footer and the exception propagates.
SimulationSummary run_simulation(const fs::path& workload, const SystemConfig& cfg, Dispatcher& dispatcher,
                                 const SimulationOptions& opts, const fs::path& dir);

struct ExperimentPlan {
  std::string name = "experiment";
  fs::path workload;
  fs::path config;
  std::vector<std::string> schedulers;
  std::vector<std::string> allocators;
  int repetitions = 10;
  std::uint64_t seed_base = 0;
  std::size_t parallelism = 1;
  fs::path out = "results";
  LoadPolicy load;
  DispatchOptions dispatch;
  bool measure_time = true;

  /// Relative paths in the plan resolve against `base_dir`. Throws ConfigError.
  static ExperimentPlan from_json(std::string_view text, const fs::path& base_dir = {});
  static ExperimentPlan from_file(const fs::path& path);

  fs::path root() const { return out / name; }
};

struct RunSpec {
  std::size_t index = 0;
  std::string dispatcher;
  int rep = 0;
  std::uint64_t seed = 0;
  fs::path dir;
};

/// Schedulers x allocators x repetitions, seed = seed_base + run index.
/// Duplicate names are dropped with a warning. Unknown names throw
/// ConfigError listing the registered ones.
std::vector<RunSpec> expand(const ExperimentPlan& plan, const DispatcherRegistry& registry,
                            std::vector<std::string>* warnings = nullptr);

struct RunOutcome {
  RunSpec spec;
  bool ok = false;
  std::string error;
  SimulationSummary summary;
};

/// Runs every spec, up to plan.parallelism at a time. A failing run is
/// recorded and the others continue. Outcomes are in spec order.
std::vector<RunOutcome> execute(const ExperimentPlan& plan, const std::vector<RunSpec>& runs,
                                const DispatcherRegistry& registry, std::ostream* progress = nullptr);

/// Report bundle file names under `<root>/report/`.
inline const std::vector<std::string>& report_files() {
  static const std::vector<std::string> files = {"slowdown.svg",  "slowdown.tsv",      "queue.svg",
                                                 "queue.tsv",     "steptime.svg",      "steptime.tsv",
                                                 "time_vs_queue.svg", "time_vs_queue.tsv", "usage_table.txt"};
  return files;
}

struct ReportResult {
  fs::path dir;
  std::vector<std::string> dispatchers;  // series present in the charts
  std::vector<std::string> notes;        // omitted series and similar
};

/// Reads the per-run TSVs of completed runs and writes the report bundle.
/// Throws std::runtime_error when no run completed.
ReportResult aggregate_and_render(const fs::path& root, const std::vector<RunOutcome>& outcomes);

/// Rebuilds outcomes from an existing experiment directory
/// (`<root>/<dispatcher>/rep<k>/`); runs whose results lack a complete footer
/// count as failed.
std::vector<RunOutcome> scan_runs(const fs::path& root);

}  // namespace wmsim
