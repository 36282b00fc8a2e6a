#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "wmsim/dispatch.hpp"
#include "wmsim/metrics.hpp"
#include "wmsim/simulator.hpp"
#include "wmsim/system.hpp"

namespace wmsim::testing {

inline const char* kSethConfig = R"({
  "system_name": "Seth - HPC2N",
  "start_time": 1027839845,
  "equivalence": {"processor": {"core": 2}},
  "groups": {"g0": {"core": 4, "mem": 1000000}},
  "resources": {"g0": 120}
})";

inline SystemConfig seth_config() { return load_config(kSethConfig); }

/// `count` nodes of one group with the given per-node capacity.
inline SystemConfig uniform_config(int count, const ResourceVector& capacity, std::int64_t start_time = 0) {
  SystemConfig cfg;
  cfg.system_name = "test";
  cfg.start_time = start_time;
  cfg.groups.push_back({"g0", capacity, count});
  return cfg;
}

inline JobRecord job(JobId id, Seconds submit, Seconds duration, std::int64_t nodes, const ResourceVector& per_node,
                     Seconds estimate = 0) {
  JobRecord j;
  j.job_id = id;
  j.submit_time = submit;
  j.duration = duration;
  j.wall_time_estimate = estimate > 0 ? estimate : duration;
  j.requested_nodes = nodes;
  j.per_node_request = per_node;
  return j;
}

/// Keeps everything a run reports.
struct Capture : Recorder {
  std::vector<JobResult> results;
  std::vector<StepBenchmark> bench;
  std::vector<std::pair<Seconds, DispatchDecision>> decisions;
  RunFooter footer;
  void on_job_completed(const JobResult& r) override { results.push_back(r); }
  void on_step(const StepBenchmark& b) override { bench.push_back(b); }
  void on_dispatch(Seconds t, const DispatchDecision& d) override { decisions.emplace_back(t, d); }
  void on_finish(const RunFooter& f) override { footer = f; }

  std::map<JobId, JobResult> by_id() const {
    std::map<JobId, JobResult> m;
    for (const auto& r : results) m[r.job_id] = r;
    return m;
  }
};

struct RunOutput {
  Capture capture;
  SimulationSummary summary;
};

inline RunOutput simulate(const std::vector<JobRecord>& jobs, const SystemConfig& cfg, Dispatcher& dispatcher,
                          SimulationOptions opts = {}) {
  RunOutput out;
  opts.measure_time = false;
  VectorSource source(jobs);
  Simulator sim(cfg, dispatcher, opts);
  sim.add_recorder(out.capture);
  out.summary = sim.run(source);
  return out;
}

inline RunOutput simulate(const std::vector<JobRecord>& jobs, const SystemConfig& cfg, const std::string& dispatcher,
                          SimulationOptions opts = {}) {
  auto d = DispatcherRegistry::with_builtins().make(dispatcher);
  return simulate(jobs, cfg, *d, opts);
}

/// Random machine of 1-4 groups over core/mem/gpu.
inline SystemConfig random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> groups(1, 4), count(1, 6), cores(1, 8), mem(1, 4), coin(0, 2);
  SystemConfig cfg;
  cfg.system_name = "random";
  const int g = groups(rng);
  for (int i = 0; i < g; ++i) {
    ResourceVector cap{{"core", cores(rng)}};
    if (coin(rng) > 0) cap.set("mem", 1000 * mem(rng));
    if (coin(rng) == 0) cap.set("gpu", 1 + coin(rng));
    cfg.groups.push_back({"g" + std::to_string(i), cap, count(rng)});
  }
  return cfg;
}

/// Random submit-ordered jobs against `cfg`; a few cannot fit at all.
inline std::vector<JobRecord> random_jobs(std::mt19937_64& rng, const SystemConfig& cfg, std::size_t n,
                                          Seconds mean_gap = 5, Seconds max_duration = 200) {
  std::uniform_int_distribution<Seconds> gap(0, 2 * mean_gap), dur(1, max_duration);
  std::uniform_int_distribution<int> pct(0, 99);
  const auto max_core = cfg.max_per_node("core");
  const auto nodes = cfg.node_count();
  std::vector<JobRecord> jobs;
  Seconds t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    ResourceVector r{{"core", std::uniform_int_distribution<Quantity>(1, max_core)(rng)}};
    if (pct(rng) < 40) r.set("mem", std::uniform_int_distribution<Quantity>(1, 2000)(rng));
    if (pct(rng) < 10) r.set("gpu", 1);
    std::int64_t k = pct(rng) < 70 ? 1 : std::uniform_int_distribution<std::int64_t>(1, nodes)(rng);
    if (pct(rng) < 2) k = nodes + 1;
    const Seconds d = dur(rng);
    const Seconds est = pct(rng) < 10 ? std::max<Seconds>(1, d / 2) : d + std::uniform_int_distribution<Seconds>(0, d)(rng);
    jobs.push_back(job(static_cast<JobId>(i + 1), t, d, k, r, est));
  }
  return jobs;
}

inline std::vector<std::string> builtin_dispatchers() { return DispatcherRegistry::with_builtins().names(); }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("wmsim_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace wmsim::testing
