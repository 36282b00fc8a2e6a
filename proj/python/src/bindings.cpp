// Python bindings: wmsim._core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <optional>

#include "wmsim/errors.hpp"
#include "wmsim/experiment.hpp"
#include "wmsim/generator.hpp"
#include "wmsim/simulator.hpp"
#include "wmsim/workload_io.hpp"

namespace py = pybind11;
using namespace wmsim;

namespace {

py::dict summary_dict(const SimulationSummary& s) {
  py::dict d;
  d["dispatcher"] = s.dispatcher;
  d["seed"] = s.seed;
  d["config_hash"] = s.config_hash;
  d["read"] = s.counts.read;
  d["completed"] = s.counts.completed;
  d["rejected"] = s.counts.rejected;
  d["steps"] = s.steps;
  d["dispatches"] = s.dispatches;
  d["final_time"] = s.final_time;
  d["peak_loaded"] = s.peak_loaded;
  d["peak_queued_running"] = s.peak_queued_running;
  d["retained_at_end"] = s.retained_at_end;
  d["wall_ms"] = s.wall_ms;
  return d;
}

ResourceVector to_vector(const py::dict& d) {
  ResourceVector v;
  for (const auto& [k, q] : d) v.set(py::cast<std::string>(k), py::cast<Quantity>(q));
  return v;
}

py::dict from_vector(const ResourceVector& v) {
  py::dict d;
  for (const auto& [k, q] : v.entries()) d[py::str(k)] = q;
  return d;
}

/// Collects completed jobs as dicts.
struct ResultList : Recorder {
  std::vector<JobResult> rows;
  void on_job_completed(const JobResult& r) override { rows.push_back(r); }
};

py::list simulate_jobs(const py::list& jobs, const std::string& config_json, const std::string& dispatcher,
                       std::int64_t load_window) {
  const auto cfg = load_config(config_json);
  std::vector<JobRecord> records;
  for (const auto& item : jobs) {
    const auto d = py::cast<py::dict>(item);
    JobRecord j;
    j.job_id = py::cast<JobId>(d["id"]);
    j.submit_time = py::cast<Seconds>(d["submit"]);
    j.duration = py::cast<Seconds>(d["duration"]);
    j.wall_time_estimate = d.contains("estimate") ? py::cast<Seconds>(d["estimate"]) : j.duration;
    j.requested_nodes = d.contains("nodes") ? py::cast<std::int64_t>(d["nodes"]) : 1;
    j.per_node_request = to_vector(py::cast<py::dict>(d["request"]));
    if (const auto err = check_job_record(j); !err.empty()) throw std::invalid_argument(err);
    records.push_back(std::move(j));
  }
  auto d = DispatcherRegistry::with_builtins().make(dispatcher);
  SimulationOptions opts;
  opts.measure_time = false;
  opts.load.amount = load_window;
  ResultList results;
  {
    py::gil_scoped_release release;
    VectorSource src(std::move(records));
    Simulator sim(cfg, *d, opts);
    sim.add_recorder(results);
    sim.run(src);
  }
  py::list out;
  for (const auto& r : results.rows) {
    py::dict row;
    row["id"] = r.job_id;
    row["submit"] = r.submit;
    row["start"] = r.start;
    row["end"] = r.end;
    row["wait"] = r.wait;
    row["duration"] = r.duration;
    row["slowdown"] = r.slowdown;
    row["nodes"] = r.nodes;
    row["request"] = from_vector(r.request);
    out.append(row);
  }
  return out;
}

py::dict simulate(const fs::path& workload, const fs::path& config, const std::string& dispatcher, const fs::path& out,
                  std::uint64_t seed, std::int64_t load_window, bool fifo_skip, bool timing) {
  const auto cfg = load_config_file(config);
  DispatchOptions dopts;
  dopts.fifo_skip = fifo_skip;
  auto d = DispatcherRegistry::with_builtins().make(dispatcher, dopts);
  SimulationOptions opts;
  opts.seed = seed;
  opts.load.amount = load_window;
  opts.measure_time = timing;
  SimulationSummary s;
  {
    py::gil_scoped_release release;
    s = run_simulation(workload, cfg, *d, opts, out);
  }
  return summary_dict(s);
}

std::size_t generate_file(const fs::path& trace, const fs::path& config, const fs::path& gen_config, const fs::path& out,
                          std::optional<std::size_t> count, std::optional<std::uint64_t> seed) {
  const auto sys = load_config_file(config);
  auto gcfg = GeneratorConfig::from_file(gen_config);
  if (count) gcfg.count = *count;
  if (seed) gcfg.seed = *seed;
  const auto rules = IngestRules::from_config(sys);
  py::gil_scoped_release release;
  std::ifstream in(trace, std::ios::binary);
  if (!in) throw IoError("cannot open trace '" + trace.string() + "'");
  SwfReader reader(in, rules);
  const auto jobs = generate(fit_profile(reader, sys, gcfg.performance), gcfg, sys);
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + out.string() + "'");
  return write_swf(jobs, os, rules, "wmsim generate seed=" + std::to_string(gcfg.seed), sys.start_time);
}

py::list experiment(const fs::path& plan_path, std::optional<fs::path> out, bool timing) {
  auto plan = ExperimentPlan::from_file(plan_path);
  if (out) plan.out = *out;
  plan.measure_time = timing;
  const auto reg = DispatcherRegistry::with_builtins();
  std::vector<RunOutcome> outcomes;
  {
    py::gil_scoped_release release;
    outcomes = execute(plan, expand(plan, reg), reg);
    try {
      aggregate_and_render(plan.root(), outcomes);
    } catch (const std::runtime_error&) {
      // Every run failed; the outcomes say why.
    }
  }
  py::list rows;
  for (const auto& o : outcomes) {
    py::dict r;
    r["dispatcher"] = o.spec.dispatcher;
    r["rep"] = o.spec.rep;
    r["seed"] = o.spec.seed;
    r["dir"] = o.spec.dir;
    r["ok"] = o.ok;
    r["error"] = o.error;
    rows.append(r);
  }
  return rows;
}

fs::path report(const fs::path& dir) {
  const auto outcomes = scan_runs(dir);
  if (outcomes.empty()) throw ConfigError("", "no runs found under '" + dir.string() + "'");
  return aggregate_and_render(dir, outcomes).dir;
}

py::dict config_info(const fs::path& path) {
  const auto cfg = load_config_file(path);
  py::dict d;
  d["system_name"] = cfg.system_name;
  d["start_time"] = cfg.start_time;
  d["nodes"] = cfg.node_count();
  d["total"] = from_vector(cfg.total_capacity());
  d["hash"] = cfg.hash();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discrete-event simulator for HPC workload management";

  static py::exception<Error> base(m, "WmsimError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<ParseError> parse_error(m, "ParseError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const ParseError& e) {
      PyErr_SetString(parse_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    } catch (const std::out_of_range& e) {
      // Unknown dispatcher names.
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("dispatchers", [] { return DispatcherRegistry::with_builtins().names(); }, "Built-in dispatcher names.");
  m.def("slowdown", &slowdown, py::arg("wait"), py::arg("duration"));
  m.def("update_vmax", &update_vmax, py::arg("v_max"), py::arg("s") = 1800.0, py::arg("pr"));
  m.def("load_config", &config_info, py::arg("path"), "Summary of a system config file.");
  m.def("simulate_jobs", &simulate_jobs, py::arg("jobs"), py::arg("config_json"), py::arg("dispatcher"),
        py::arg("load_window") = 1000,
        "Simulate in-memory jobs. Each job is a dict with id, submit, duration, request and optional estimate, nodes.");
  m.def("simulate", &simulate, py::arg("workload"), py::arg("config"), py::arg("dispatcher"),
        py::arg("out") = fs::path("results"), py::arg("seed") = 0, py::arg("load_window") = 1000,
        py::arg("fifo_skip") = false, py::arg("timing") = true, "Simulate an SWF file and write the run files.");
  m.def("generate", &generate_file, py::arg("trace"), py::arg("config"), py::arg("gen_config"), py::arg("out"),
        py::arg("count") = py::none(), py::arg("seed") = py::none(), "Fit a trace and write a synthetic SWF file.");
  m.def("experiment", &experiment, py::arg("plan"), py::arg("out") = py::none(), py::arg("timing") = true,
        "Run an experiment plan and render its report.");
  m.def("report", &report, py::arg("dir"), "Re-render the report of an experiment directory.");
}
