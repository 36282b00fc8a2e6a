#pragma once

// Trace-level acceptance checks shared by the surrogate and the real-trace
// binaries.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wmsim/errors.hpp"
#include "wmsim/experiment.hpp"
#include "wmsim/generator.hpp"
#include "wmsim/metrics.hpp"
#include "wmsim/simulator.hpp"
#include "wmsim/workload_io.hpp"

namespace wmsim::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Prints "PASS|FAIL <label>: <detail> (<seconds>s)" and records failures.
class Board {
 public:
  void run(const std::string& label, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", secs);
    std::cout << (o.pass ? "PASS " : "FAIL ") << label << ": " << o.detail << " (" << buf << "s)" << std::endl;
    if (!o.pass) ++failed_;
  }
  int exit_code() const { return failed_ == 0 ? 0 : 1; }

 private:
  int failed_ = 0;
};

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

/// First `limit` jobs of another source.
class TakeSource : public JobSource {
 public:
  TakeSource(JobSource& inner, std::size_t limit) : inner_(inner), left_(limit) {}
  std::optional<JobRecord> next() override {
    if (left_ == 0) return std::nullopt;
    --left_;
    return inner_.next();
  }

 private:
  JobSource& inner_;
  std::size_t left_;
};

inline SummaryReport simulate_trace(const fs::path& trace, const SystemConfig& cfg, const std::string& dispatcher,
                                    std::size_t limit, SimulationSummary* sim = nullptr) {
  std::ifstream in(trace);
  if (!in) throw IoError("cannot open " + trace.string());
  SwfReader reader(in, IngestRules::from_config(cfg));
  TakeSource source(reader, limit);
  auto d = DispatcherRegistry::with_builtins().make(dispatcher);
  SimulationOptions opts;
  opts.measure_time = false;
  Simulator s(cfg, *d, opts);
  SummaryCollector collector;
  s.add_recorder(collector);
  const auto summary = s.run(source);
  if (sim) *sim = summary;
  return collector.report();
}

/// EBF and SJF beat FIFO on the first 20k jobs.
inline Outcome dispatcher_ordering(const fs::path& trace, const SystemConfig& cfg) {
  const std::size_t n = 20000;
  const auto fifo = simulate_trace(trace, cfg, "FIFO-FF", n);
  const auto ebf = simulate_trace(trace, cfg, "EBF-FF", n);
  const auto sjf = simulate_trace(trace, cfg, "SJF-FF", n);
  const bool ok = ebf.slowdown.mean <= fifo.slowdown.mean && sjf.slowdown.median <= fifo.slowdown.median;
  return {ok, std::to_string(fifo.jobs) + " jobs; mean slowdown EBF-FF " + fmt(ebf.slowdown.mean) + " vs FIFO-FF " +
                  fmt(fifo.slowdown.mean) + "; median SJF-FF " + fmt(sjf.slowdown.median) + " vs FIFO-FF " +
                  fmt(fifo.slowdown.median)};
}

/// Incremental loading keeps memory bounded on the whole trace.
inline Outcome bounded_memory(const fs::path& trace, const SystemConfig& cfg, const std::string& dispatcher) {
  SimulationSummary sim;
  simulate_trace(trace, cfg, dispatcher, std::numeric_limits<std::size_t>::max(), &sim);
  const auto total = static_cast<std::int64_t>(sim.counts.read);
  const bool bound = sim.peak_loaded <= 1000 + sim.peak_queued_running;
  const bool small = sim.peak_loaded * 10 < total;
  const bool evicted = sim.retained_at_end == 0;
  return {bound && small && evicted && sim.counts.conserved(),
          dispatcher + " over " + std::to_string(total) + " jobs: peak loaded " + std::to_string(sim.peak_loaded) +
              " <= 1000 + " + std::to_string(sim.peak_queued_running) + ", " +
              fmt(100.0 * static_cast<double>(sim.peak_loaded) / static_cast<double>(std::max<std::int64_t>(1, total))) +
              "% of jobs, retained at end " + std::to_string(sim.retained_at_end)};
}

inline std::vector<JobRecord> read_jobs(const fs::path& trace, const SystemConfig& cfg) {
  std::ifstream in(trace);
  if (!in) throw IoError("cannot open " + trace.string());
  SwfReader reader(in, IngestRules::from_config(cfg));
  std::vector<JobRecord> jobs;
  while (auto j = reader.next()) jobs.push_back(std::move(*j));
  return jobs;
}

/// Synthetic workload resembles the trace it was fitted on.
inline Outcome generator_similarity(const fs::path& trace, const SystemConfig& cfg, GeneratorConfig gen) {
  gen.count = 10000;
  const auto real = read_jobs(trace, cfg);
  VectorSource source(real);
  const auto profile = fit_profile(source, cfg, gen.performance);
  const auto synth = generate(profile, gen, cfg);

  const auto hr = hourly_histogram(real, cfg.start_time);
  const auto hs = hourly_histogram(synth, cfg.start_time);
  const auto dr = weekday_histogram(real, cfg.start_time);
  const auto ds = weekday_histogram(synth, cfg.start_time);
  const double tvd_h = total_variation(hr, hs);
  const double tvd_d = total_variation(dr, ds);

  auto gflops = [&](const std::vector<JobRecord>& jobs) {
    std::vector<double> v;
    for (const auto& j : jobs) {
      const double g = job_gflop(j, gen.performance);
      if (g > 0) v.push_back(g);
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto gr = gflops(real);
  const auto gs = gflops(synth);
  bool quartiles = true;
  std::string q;
  for (double p : {0.25, 0.5, 0.75}) {
    const double a = nearest_rank(gr, p);
    const double b = nearest_rank(gs, p);
    const double rel = std::abs(b - a) / a;
    quartiles = quartiles && rel <= 0.20;
    q += (q.empty() ? "" : ", ") + fmt(b) + " vs " + fmt(a) + " (" + fmt(rel * 100) + "%)";
  }
  return {synth.size() == 10000 && tvd_h <= 0.15 && tvd_d <= 0.15 && quartiles,
          "hourly TVD " + fmt(tvd_h) + ", weekday TVD " + fmt(tvd_d) + ", GFLOP quartile deviations " + q};
}

/// 4 schedulers x 2 allocators x 2 repetitions over the first 5k jobs.
inline Outcome experiment_bundle(const fs::path& trace, const fs::path& config_path, const fs::path& work) {
  const auto cfg = load_config_file(config_path);
  fs::remove_all(work);
  fs::create_directories(work);
  const auto subset = work / "subset.swf";
  {
    auto jobs = read_jobs(trace, cfg);
    if (jobs.size() > 5000) jobs.resize(5000);
    std::ofstream out(subset);
    write_swf(jobs, out, IngestRules::from_config(cfg), "first 5000 jobs", cfg.start_time);
  }
  ExperimentPlan plan;
  plan.name = "bundle";
  plan.workload = subset;
  plan.config = config_path;
  plan.schedulers = {"FIFO", "SJF", "LJF", "EBF"};
  plan.allocators = {"FF", "BF"};
  plan.repetitions = 2;
  plan.parallelism = std::max(1u, std::thread::hardware_concurrency());
  plan.out = work;
  const auto reg = DispatcherRegistry::with_builtins();
  const auto runs = expand(plan, reg);
  const auto outcomes = execute(plan, runs, reg);
  const auto report = aggregate_and_render(plan.root(), outcomes);

  std::size_t dirs = 0, ok = 0;
  for (const auto& o : outcomes) {
    if (fs::is_directory(o.spec.dir)) ++dirs;
    if (o.ok) ++ok;
  }
  std::size_t files = 0;
  for (const auto& f : report_files()) files += fs::exists(report.dir / f) ? 1 : 0;
  std::ifstream table(report.dir / "usage_table.txt");
  std::stringstream ss;
  ss << table.rdbuf();
  const bool mu_sigma = ss.str().find("mu") != std::string::npos && ss.str().find("sigma") != std::string::npos;
  std::size_t rows = 0;
  for (const auto& s : report.dispatchers) rows += ss.str().find(s + " ") != std::string::npos ? 1 : 0;
  return {dirs == 16 && ok == 16 && files == report_files().size() && mu_sigma && rows == 8,
          std::to_string(dirs) + " run directories (" + std::to_string(ok) + " ok), " + std::to_string(files) +
              " report files, usage table rows " + std::to_string(rows) + (mu_sigma ? " with mu/sigma" : " without mu/sigma")};
}

}  // namespace wmsim::acceptance
