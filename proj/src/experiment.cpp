#include "wmsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wmsim/errors.hpp"
#include "wmsim/metrics.hpp"
#include "wmsim/workload_io.hpp"

namespace wmsim {

RunFiles RunFiles::in(const fs::path& dir, const std::string& dispatcher) {
  return {dir / (dispatcher + ".results.tsv"), dir / (dispatcher + ".bench.tsv"), dir / (dispatcher + ".summary.json")};
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

void write_run_summary(const fs::path& path, const SummaryReport& report, const RunFooter& footer,
                       const SimulationSummary& s) {
  std::ostringstream metrics;
  write_summary_json(report, footer, metrics);
  auto j = nlohmann::ordered_json::parse(metrics.str());
  j["simulation"] = {{"read", s.counts.read},
                     {"completed", s.counts.completed},
                     {"rejected", s.counts.rejected},
                     {"steps", s.steps},
                     {"dispatches", s.dispatches},
                     {"final_time", s.final_time},
                     {"peak_loaded", s.peak_loaded},
                     {"peak_queued_running", s.peak_queued_running},
                     {"peak_unsubmitted", s.peak_unsubmitted},
                     {"retained_at_end", s.retained_at_end}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

SimulationSummary run_simulation(const fs::path& workload, const SystemConfig& cfg, Dispatcher& dispatcher,
                                 const SimulationOptions& opts, const fs::path& dir) {
  std::ifstream in(workload, std::ios::binary);
  if (!in) throw IoError("cannot open workload '" + workload.string() + "'");
  fs::create_directories(dir);
  const auto files = RunFiles::in(dir, dispatcher.name());
  auto results_out = open_out(files.results);
  auto bench_out = open_out(files.bench);
  TsvResultsWriter results(results_out);
  TsvBenchWriter bench(bench_out);
  SummaryCollector collector;

  SwfReader reader(in, IngestRules::from_config(cfg));
  Simulator sim(cfg, dispatcher, opts);
  sim.add_recorder(results);
  sim.add_recorder(bench);
  sim.add_recorder(collector);
  SimulationSummary summary;
  try {
    summary = sim.run(reader);
  } catch (...) {
    const RunFooter partial{opts.seed, dispatcher.name(), cfg.hash(), 0, true};
    results.on_finish(partial);
    bench.on_finish(partial);
    throw;
  }
  const RunFooter footer{summary.seed, summary.dispatcher, summary.config_hash, summary.wall_ms, false};
  write_run_summary(files.summary, collector.report(), footer, summary);
  return summary;
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array()) throw ConfigError(key, "missing or not an array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j[key].size(); ++i) {
    if (!j[key][i].is_string()) throw ConfigError(key + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(j[key][i].get<std::string>());
  }
  if (out.empty()) throw ConfigError(key, "needs at least one name");
  return out;
}

std::int64_t integer(const nlohmann::json& j, const std::string& key, std::int64_t min) {
  if (!j[key].is_number_integer()) throw ConfigError(key, "expected an integer");
  const auto v = j[key].get<std::int64_t>();
  if (v < min) throw ConfigError(key, "must be >= " + std::to_string(min));
  return v;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentPlan ExperimentPlan::from_json(std::string_view text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "expected a JSON object");
  ExperimentPlan p;
  if (j.contains("name")) {
    if (!j["name"].is_string() || j["name"].get<std::string>().empty()) throw ConfigError("name", "expected a name");
    p.name = j["name"].get<std::string>();
  }
  for (const char* key : {"workload", "config"}) {
    if (!j.contains(key) || !j[key].is_string()) throw ConfigError(key, "missing or not a path");
  }
  p.workload = resolve(base_dir, j["workload"].get<std::string>());
  p.config = resolve(base_dir, j["config"].get<std::string>());
  p.schedulers = string_list(j, "schedulers");
  p.allocators = string_list(j, "allocators");
  if (j.contains("repetitions")) p.repetitions = static_cast<int>(integer(j, "repetitions", 1));
  if (j.contains("seed_base")) p.seed_base = static_cast<std::uint64_t>(integer(j, "seed_base", 0));
  if (j.contains("parallelism")) p.parallelism = static_cast<std::size_t>(integer(j, "parallelism", 1));
  if (j.contains("load_window")) p.load.amount = integer(j, "load_window", 1);
  if (j.contains("fifo_skip")) {
    if (!j["fifo_skip"].is_boolean()) throw ConfigError("fifo_skip", "expected a boolean");
    p.dispatch.fifo_skip = j["fifo_skip"].get<bool>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw ConfigError("out", "expected a path");
    p.out = resolve(base_dir, j["out"].get<std::string>());
  }
  return p;
}

ExperimentPlan ExperimentPlan::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open plan '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path.parent_path());
}

std::vector<RunSpec> expand(const ExperimentPlan& plan, const DispatcherRegistry& registry,
                            std::vector<std::string>* warnings) {
  if (plan.repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
  auto dedupe = [&](const std::vector<std::string>& names, const std::vector<std::string>& known, const char* what) {
    std::vector<std::string> out;
    for (const auto& n : names) {
      if (std::find(known.begin(), known.end(), n) == known.end()) {
        std::string list;
        for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError(what, "unknown name '" + n + "'; registered: " + list);
      }
      if (std::find(out.begin(), out.end(), n) != out.end()) {
        if (warnings) warnings->push_back(std::string("duplicate ") + what + " '" + n + "' ignored");
        continue;
      }
      out.push_back(n);
    }
    if (out.empty()) throw ConfigError(what, "needs at least one name");
    return out;
  };
  const auto scheds = dedupe(plan.schedulers, registry.scheduler_names(), "schedulers");
  const auto allocs = dedupe(plan.allocators, registry.allocator_names(), "allocators");

  std::vector<RunSpec> runs;
  for (const auto& s : scheds) {
    for (const auto& a : allocs) {
      const std::string name = s + "-" + a;
      for (int k = 0; k < plan.repetitions; ++k) {
        RunSpec r;
        r.index = runs.size();
        r.dispatcher = name;
        r.rep = k;
        r.seed = plan.seed_base + r.index;
        r.dir = plan.root() / name / ("rep" + std::to_string(k));
        runs.push_back(std::move(r));
      }
    }
  }
  return runs;
}

std::vector<RunOutcome> execute(const ExperimentPlan& plan, const std::vector<RunSpec>& runs,
                                const DispatcherRegistry& registry, std::ostream* progress) {
  const SystemConfig cfg = load_config_file(plan.config);
  std::vector<RunOutcome> outcomes(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      RunOutcome& o = outcomes[i];
      o.spec = runs[i];
      try {
        auto dispatcher = registry.make(runs[i].dispatcher, plan.dispatch);
        SimulationOptions opts;
        opts.load = plan.load;
        opts.seed = runs[i].seed;
        opts.measure_time = plan.measure_time;
        o.summary = run_simulation(plan.workload, cfg, *dispatcher, opts, runs[i].dir);
        o.ok = true;
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      if (progress) {
        std::lock_guard lock(log_mutex);
        *progress << (o.ok ? "done   " : "FAILED ") << o.spec.dispatcher << " rep" << o.spec.rep;
        if (!o.ok) *progress << ": " << o.error;
        *progress << '\n';
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(plan.parallelism, 1, std::max<std::size_t>(runs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return outcomes;
}

std::vector<RunOutcome> scan_runs(const fs::path& root) {
  std::vector<RunOutcome> out;
  if (!fs::is_directory(root)) return out;
  std::vector<fs::path> dispatcher_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && e.path().filename() != "report") dispatcher_dirs.push_back(e.path());
  }
  std::sort(dispatcher_dirs.begin(), dispatcher_dirs.end());
  for (const auto& d : dispatcher_dirs) {
    const std::string name = d.filename().string();
    std::vector<std::pair<int, fs::path>> reps;
    for (const auto& e : fs::directory_iterator(d)) {
      const auto leaf = e.path().filename().string();
      if (!e.is_directory() || leaf.rfind("rep", 0) != 0) continue;
      try {
        reps.emplace_back(std::stoi(leaf.substr(3)), e.path());
      } catch (const std::exception&) {
      }
    }
    std::sort(reps.begin(), reps.end());
    for (const auto& [k, dir] : reps) {
      RunOutcome o;
      o.spec.index = out.size();
      o.spec.dispatcher = name;
      o.spec.rep = k;
      o.spec.dir = dir;
      std::ifstream in(RunFiles::in(dir, name).results);
      RunFooter footer;
      footer.partial = true;
      const bool opened = in.is_open();
      try {
        if (opened) read_results_tsv(in, &footer);
        o.ok = opened && !footer.partial && !footer.dispatcher.empty();
        o.spec.seed = footer.seed;
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      if (!o.ok && o.error.empty()) o.error = "incomplete run output";
      out.push_back(std::move(o));
    }
  }
  return out;
}

}  // namespace wmsim
