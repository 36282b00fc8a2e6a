#pragma once

#include <cstdint>
#include <string>

#include "wmsim/resources.hpp"

namespace wmsim {

using JobId = std::int64_t;
/// Simulated time in whole seconds, relative to the trace epoch.
using Seconds = std::int64_t;

/// One job of a workload trace.
///
/// `duration` is the real run time and is only ever read by the event
/// manager; dispatchers see `wall_time_estimate` through QueuedJob.
struct JobRecord {
  JobId job_id = 0;
  Seconds submit_time = 0;
  Seconds duration = 1;
  Seconds wall_time_estimate = 1;
  std::int64_t requested_nodes = 1;
  ResourceVector per_node_request;
  std::int64_t user_id = -1;
  std::int64_t group_id = -1;
  std::int64_t queue_id = -1;

  friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

/// Checks the record invariants; returns an empty string when valid,
/// otherwise a description of the first violation.
std::string check_job_record(const JobRecord& job);

/// Total demand of a job: per-node request times node count.
inline ResourceVector total_request(const JobRecord& job) {
  return job.per_node_request * job.requested_nodes;
}

}  // namespace wmsim
