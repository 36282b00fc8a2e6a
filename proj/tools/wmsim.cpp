// wmsim command line: simulate, generate, experiment, report, validate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmsim/errors.hpp"
#include "wmsim/experiment.hpp"
#include "wmsim/generator.hpp"
#include "wmsim/simulator.hpp"
#include "wmsim/workload_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct SimulateArgs {
  std::string workload, config, dispatcher, out = "./results";
  std::uint64_t seed = 0;
  std::int64_t status_interval = 0;
  std::int64_t load_window = 1000;
  bool fifo_skip = false;
  bool no_timing = false;
};

struct GenerateArgs {
  std::string trace, config, gen_config, out;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
};

struct ExperimentArgs {
  std::string plan, workload, config, name = "experiment", out;
  std::vector<std::string> schedulers, allocators;
  int repetitions = 10;
  std::uint64_t seed_base = 0;
  std::size_t parallelism = 1;
  std::int64_t load_window = 1000;
  bool fifo_skip = false;
  bool no_timing = false;
};

int simulate(const SimulateArgs& a, const wmsim::DispatcherRegistry& registry) {
  const auto cfg = wmsim::load_config_file(a.config);
  wmsim::DispatchOptions dopts;
  dopts.fifo_skip = a.fifo_skip;
  auto dispatcher = registry.make(a.dispatcher, dopts);
  wmsim::SimulationOptions opts;
  opts.seed = a.seed;
  opts.load.amount = a.load_window;
  opts.status_interval = a.status_interval;
  opts.status = &std::cout;
  opts.measure_time = !a.no_timing;
  const auto s = wmsim::run_simulation(a.workload, cfg, *dispatcher, opts, a.out);
  std::cout << dispatcher->name() << ": " << s.counts.completed << " jobs completed, " << s.counts.rejected
            << " rejected, " << s.steps << " time points, peak loaded " << s.peak_loaded << ", wall " << s.wall_ms
            << " ms\n";
  const auto files = wmsim::RunFiles::in(a.out, dispatcher->name());
  std::cout << files.results.string() << '\n' << files.bench.string() << '\n' << files.summary.string() << '\n';
  return kOk;
}

int generate(const GenerateArgs& a) {
  const auto sys = wmsim::load_config_file(a.config);
  auto gcfg = wmsim::GeneratorConfig::from_file(a.gen_config);
  if (a.count) gcfg.count = *a.count;
  if (a.seed) gcfg.seed = *a.seed;
  const auto rules = wmsim::IngestRules::from_config(sys);
  std::ifstream in(a.trace, std::ios::binary);
  if (!in) throw wmsim::IoError("cannot open trace '" + a.trace + "'");
  wmsim::SwfReader reader(in, rules);
  const auto profile = wmsim::fit_profile(reader, sys, gcfg.performance);
  if (profile.flop_excluded > 0) {
    std::cerr << "warning: " << profile.flop_excluded << " trace jobs have zero performance and were left out of the FLOP samples\n";
  }
  const auto jobs = wmsim::generate(profile, gcfg, sys);
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw wmsim::IoError("cannot write '" + a.out + "'");
  wmsim::SwfWriter writer(out, rules, "wmsim generate from " + std::filesystem::path(a.trace).filename().string() +
                                          " seed=" + std::to_string(gcfg.seed),
                          sys.start_time);
  for (const auto& j : jobs) writer.write(j);
  writer.finish();
  if (!out) throw wmsim::IoError("write error on '" + a.out + "'");
  std::cout << writer.lines_written() << " jobs written to " << a.out << '\n';
  if (writer.dropped_records() > 0) {
    std::cerr << "warning: " << writer.dropped_records() << " jobs requested resource types SWF cannot store\n";
  }
  return kOk;
}

int experiment(const ExperimentArgs& a, const wmsim::DispatcherRegistry& registry) {
  wmsim::ExperimentPlan plan;
  if (!a.plan.empty()) {
    plan = wmsim::ExperimentPlan::from_file(a.plan);
  } else {
    if (a.workload.empty() || a.config.empty() || a.schedulers.empty() || a.allocators.empty()) {
      throw wmsim::ConfigError("", "need --plan, or --workload, --config, --schedulers and --allocators");
    }
    plan.name = a.name;
    plan.workload = a.workload;
    plan.config = a.config;
    plan.schedulers = a.schedulers;
    plan.allocators = a.allocators;
    plan.repetitions = a.repetitions;
    plan.seed_base = a.seed_base;
    plan.parallelism = a.parallelism;
    plan.load.amount = a.load_window;
    plan.dispatch.fifo_skip = a.fifo_skip;
  }
  if (!a.out.empty()) plan.out = a.out;
  if (a.no_timing) plan.measure_time = false;

  // Fail fast before any run starts.
  if (!std::filesystem::is_regular_file(plan.workload)) {
    throw wmsim::ConfigError("workload", "no such file '" + plan.workload.string() + "'");
  }
  wmsim::load_config_file(plan.config);
  std::vector<std::string> warnings;
  const auto runs = wmsim::expand(plan, registry, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  const auto outcomes = wmsim::execute(plan, runs, registry, &std::cout);
  std::size_t failed = 0;
  for (const auto& o : outcomes) failed += o.ok ? 0 : 1;
  int rc = failed > 0 ? kRuntime : kOk;
  try {
    const auto report = wmsim::aggregate_and_render(plan.root(), outcomes);
    for (const auto& n : report.notes) std::cerr << "note: " << n << '\n';
    std::cout << "report: " << report.dir.string() << '\n';
  } catch (const std::runtime_error& e) {
    std::cerr << "report: " << e.what() << '\n';
    rc = kRuntime;
  }
  std::cout << outcomes.size() - failed << " of " << outcomes.size() << " runs completed\n";
  return rc;
}

int report(const std::string& dir) {
  const auto outcomes = wmsim::scan_runs(dir);
  if (outcomes.empty()) throw wmsim::ConfigError("", "no runs found under '" + dir + "'");
  const auto r = wmsim::aggregate_and_render(dir, outcomes);
  for (const auto& n : r.notes) std::cerr << "note: " << n << '\n';
  std::cout << "report: " << r.dir.string() << '\n';
  return kOk;
}

int validate(const std::string& workload, const std::string& config) {
  if (workload.empty() && config.empty()) throw wmsim::ConfigError("", "need --workload and/or --config");
  wmsim::IngestRules rules;
  if (!config.empty()) {
    const auto cfg = wmsim::load_config_file(config);
    rules = wmsim::IngestRules::from_config(cfg);
    std::cout << cfg.system_name << ": " << cfg.node_count() << " nodes";
    const auto total = cfg.total_capacity();
    for (const auto& [type, q] : total.entries()) std::cout << ", " << q << ' ' << type;
    std::cout << "\nconfig hash " << cfg.hash() << '\n';
  }
  if (!workload.empty()) {
    wmsim::SwfStats stats;
    const auto jobs = wmsim::read_swf_file(workload, rules, &stats);
    if (jobs.empty()) throw wmsim::ParseError(stats.lines, "workload has no usable jobs");
    std::cout << workload << ": " << stats.data_lines << " data lines, " << stats.accepted << " jobs accepted, "
              << stats.skipped() << " filtered (run time " << stats.skipped_runtime << ", processors "
              << stats.skipped_processors << ", submit " << stats.skipped_submit << ", job id " << stats.skipped_job_id
              << ")\n";
    std::cout << "submit span " << jobs.front().submit_time << " .. " << jobs.back().submit_time << " s\n";
  }
  return kOk;
}

std::string dispatcher_list(const wmsim::DispatcherRegistry& registry) {
  std::string s = "Dispatchers:";
  for (const auto& n : registry.names()) s += " " + n;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  const auto registry = wmsim::DispatcherRegistry::with_builtins();
  CLI::App app{"Discrete-event simulator of HPC workload management"};
  app.footer(dispatcher_list(registry));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Replay a workload against a system with one dispatcher");
  s->add_option("--workload", sim.workload, "SWF workload file")->required()->check(CLI::ExistingFile);
  s->add_option("--config", sim.config, "System configuration JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--dispatcher", sim.dispatcher, "SCHEDULER-ALLOCATOR, e.g. EBF-FF")->required();
  s->add_option("--seed", sim.seed, "Seed passed to the dispatcher")->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->capture_default_str();
  s->add_option("--status-interval", sim.status_interval, "Simulated seconds between status lines (0 = off)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  s->add_option("--load-window", sim.load_window, "Maximum loaded but not yet submitted jobs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s->add_flag("--fifo-skip", sim.fifo_skip, "FIFO/SJF/LJF pass over jobs that do not fit");
  s->add_flag("--no-timing", sim.no_timing, "Write 0 for wall-clock timing fields");
  s->footer(dispatcher_list(registry));

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Synthesize a workload that mimics a real trace");
  g->add_option("--trace", gen.trace, "Real SWF trace to fit")->required()->check(CLI::ExistingFile);
  g->add_option("--config", gen.config, "System configuration JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--gen-config", gen.gen_config, "Generator configuration JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--count", gen.count, "Number of jobs (overrides the generator config)");
  g->add_option("--seed", gen.seed, "Seed (overrides the generator config)");
  g->add_option("--out", gen.out, "Output SWF file")->required();

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Run schedulers x allocators x repetitions and render a report");
  e->add_option("--plan", ex.plan, "Experiment plan JSON")->check(CLI::ExistingFile);
  e->add_option("--workload", ex.workload, "SWF workload file");
  e->add_option("--config", ex.config, "System configuration JSON");
  e->add_option("--schedulers", ex.schedulers, "Scheduler names")->delimiter(',');
  e->add_option("--allocators", ex.allocators, "Allocator names")->delimiter(',');
  e->add_option("--repetitions", ex.repetitions)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--seed-base", ex.seed_base)->capture_default_str();
  e->add_option("--parallelism", ex.parallelism)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--load-window", ex.load_window)->check(CLI::PositiveNumber)->capture_default_str();
  e->add_option("--name", ex.name)->capture_default_str();
  e->add_option("--out", ex.out, "Output root (default: plan's, else ./results)");
  e->add_flag("--fifo-skip", ex.fifo_skip);
  e->add_flag("--no-timing", ex.no_timing, "Write 0 for wall-clock timing fields");
  e->footer(dispatcher_list(registry));

  std::string report_dir;
  auto* r = app.add_subcommand("report", "Re-render the report bundle of an experiment directory");
  r->add_option("--dir", report_dir, "Experiment directory (<out>/<name>)")->required()->check(CLI::ExistingDirectory);

  std::string v_workload, v_config;
  auto* v = app.add_subcommand("validate", "Parse inputs and print statistics without simulating");
  v->add_option("--workload", v_workload)->check(CLI::ExistingFile);
  v->add_option("--config", v_config)->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return simulate(sim, registry);
    if (*g) return generate(gen);
    if (*e) return experiment(ex, registry);
    if (*r) return report(report_dir);
    if (*v) return validate(v_workload, v_config);
  } catch (const wmsim::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kUsage;
  } catch (const wmsim::ParseError& err) {
    std::cerr << "parse error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::out_of_range& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "runtime error: " << err.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
