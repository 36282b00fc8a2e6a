#pragma once

// Reference loops used by the tests. They share no code with the simulator
// core: both advance one simulated second at a time.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "wmsim/dispatch.hpp"
#include "wmsim/job.hpp"
#include "wmsim/system.hpp"

namespace wmsim::testing {

struct OracleJob {
  JobId id = 0;
  Seconds submit = 0;
  Seconds duration = 1;
  std::int64_t nodes = 1;
  std::int64_t cores = 1;  // per node
};

/// Start time per job id; rejected jobs (can never fit) are absent.
using StartTimes = std::map<JobId, Seconds>;

/// Blocking FIFO with first-fit placement on identical single-resource nodes.
inline StartTimes brute_force_fifo_ff(const std::vector<OracleJob>& jobs, int node_count, std::int64_t cores) {
  std::vector<OracleJob> order = jobs;
  std::stable_sort(order.begin(), order.end(), [](const OracleJob& a, const OracleJob& b) {
    return a.submit != b.submit ? a.submit < b.submit : a.id < b.id;
  });
  std::vector<std::int64_t> free(node_count, cores);
  struct Live {
    Seconds end;
    std::vector<int> nodes;
    std::int64_t cores;
  };
  std::vector<Live> live;
  std::vector<OracleJob> waiting;
  StartTimes starts;
  std::size_t next = 0;
  for (Seconds t = 0; next < order.size() || !waiting.empty() || !live.empty(); ++t) {
    for (auto it = live.begin(); it != live.end();) {
      if (it->end == t) {
        for (int n : it->nodes) free[n] += it->cores;
        it = live.erase(it);
      } else {
        ++it;
      }
    }
    while (next < order.size() && order[next].submit == t) {
      const auto& j = order[next++];
      if (j.nodes <= node_count && j.cores <= cores) waiting.push_back(j);
    }
    while (!waiting.empty()) {
      const auto& head = waiting.front();
      std::vector<int> picked;
      for (int n = 0; n < node_count && static_cast<std::int64_t>(picked.size()) < head.nodes; ++n) {
        if (free[n] >= head.cores) picked.push_back(n);
      }
      if (static_cast<std::int64_t>(picked.size()) < head.nodes) break;
      for (int n : picked) free[n] -= head.cores;
      starts[head.id] = t;
      live.push_back({t + head.duration, picked, head.cores});
      waiting.erase(waiting.begin());
    }
  }
  return starts;
}

struct TickResult {
  StartTimes start;
  std::map<JobId, std::vector<std::uint32_t>> nodes;
};

/// Per-second loop around any dispatcher: the dispatcher is consulted at
/// each second in which a job arrived or finished.
inline TickResult tick_reference(const std::vector<JobRecord>& jobs, const SystemConfig& cfg, Dispatcher& dispatcher) {
  NodePool pool(cfg);
  const auto& types = pool.types();
  std::vector<JobRecord> order = jobs;  // already submit-ordered
  std::vector<QueuedJob> queue;
  struct Live {
    RunningJob job;
    Seconds end;
  };
  std::vector<Live> live;
  std::map<JobId, Seconds> durations;
  TickResult out;
  std::size_t next = 0;
  const AdditionalValues none;
  for (Seconds t = 0; next < order.size() || !queue.empty() || !live.empty(); ++t) {
    bool event = false;
    std::vector<JobId> done;
    for (const auto& l : live) {
      if (l.end == t) done.push_back(l.job.id);
    }
    std::sort(done.begin(), done.end());
    for (JobId id : done) {
      auto it = std::find_if(live.begin(), live.end(), [&](const Live& l) { return l.job.id == id; });
      pool.release(it->job.allocation);
      live.erase(it);
      event = true;
    }
    std::vector<JobRecord> arriving;
    while (next < order.size() && order[next].submit_time == t) arriving.push_back(order[next++]);
    std::sort(arriving.begin(), arriving.end(), [](const auto& a, const auto& b) { return a.job_id < b.job_id; });
    for (const auto& j : arriving) {
      event = true;
      auto dense = types.densify(j.per_node_request);
      if (!dense || !pool.satisfiable(j.requested_nodes, *dense)) continue;
      queue.push_back({j.job_id, j.submit_time, j.wall_time_estimate, j.requested_nodes, *dense});
      durations[j.job_id] = j.duration;
    }
    if (!event || queue.empty()) continue;
    std::vector<RunningJob> running;
    for (const auto& l : live) running.push_back(l.job);
    SystemView view{t, queue, running, &pool, &none, 0};
    const auto decision = dispatcher.dispatch(view);
    for (const auto& a : decision.starts) {
      auto q = std::find_if(queue.begin(), queue.end(), [&](const QueuedJob& x) { return x.id == a.job_id; });
      pool.allocate(a);
      live.push_back({RunningJob{a.job_id, t, q->wall_time_estimate, a}, t + durations[a.job_id]});
      out.start[a.job_id] = t;
      out.nodes[a.job_id] = a.nodes;
      queue.erase(q);
    }
  }
  return out;
}

}  // namespace wmsim::testing
