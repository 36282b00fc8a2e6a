#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "wmsim/dispatch.hpp"
#include "wmsim/job.hpp"
#include "wmsim/metrics.hpp"
#include "wmsim/system.hpp"
#include "wmsim/workload_io.hpp"

namespace wmsim {

enum class JobState { kLoaded, kQueued, kRunning, kCompleted };

enum class EventKind : std::uint8_t { kCompletion = 0, kSubmission = 1 };

struct Event {
  Seconds time = 0;
  EventKind kind = EventKind::kSubmission;
  JobId job_id = 0;

  friend auto operator<=>(const Event&, const Event&) = default;
};

/// Time-ordered events. At equal times completions precede submissions and
/// ties break by job id.
class EventQueue {
 public:
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  Seconds next_time() const { return heap_.top().time; }
  /// Throws std::logic_error for an event earlier than `clock`.
  void push(Event e, Seconds clock);
  /// Removes and returns every event at next_time(), in order.
  std::vector<Event> pop_next();

 private:
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
};

/// Extension point for extra per-step observations (power, failures, ...).
/// Runs before the dispatcher at every event time.
class AdditionalData {
 public:
  virtual ~AdditionalData() = default;
  virtual void update(const SystemView& view, AdditionalValues& values) = 0;
};

/// Incremental loading. kCount keeps at most `amount` loaded-but-unsubmitted
/// jobs; kHorizon loads jobs submitted within `amount` seconds of the clock.
/// Either way at least one job is loaded while the stream has any left.
struct LoadPolicy {
  enum class Kind { kCount, kHorizon };
  Kind kind = Kind::kCount;
  std::int64_t amount = 1000;
};

struct SimulationOptions {
  LoadPolicy load;
  Seconds status_interval = 0;  // simulated seconds; 0 disables the status stream
  std::ostream* status = nullptr;
  std::uint64_t seed = 0;
  bool measure_time = true;  // false writes 0 for every timing field
};

struct JobCounts {
  std::size_t read = 0;
  std::size_t loaded = 0;
  std::size_t queued = 0;
  std::size_t running = 0;
  std::size_t completed = 0;
  std::size_t rejected = 0;  // can never fit the machine; never queued

  bool conserved() const { return loaded + queued + running + completed + rejected == read; }
};

struct SimulationSummary {
  std::string dispatcher;
  std::uint64_t seed = 0;
  std::string config_hash;
  JobCounts counts;
  std::int64_t steps = 0;
  std::int64_t dispatches = 0;
  Seconds final_time = 0;  // epoch seconds: config start_time + last event time
  std::int64_t peak_loaded = 0;
  std::int64_t peak_queued_running = 0;
  std::int64_t peak_unsubmitted = 0;
  std::size_t retained_at_end = 0;
  std::int64_t wall_ms = 0;
};

/// Owning copy of a SystemView.
struct SystemSnapshot {
  Seconds now = 0;
  std::vector<QueuedJob> queue;
  std::vector<RunningJob> running;
  std::vector<ResourceVector> node_free;
  std::vector<ResourceVector> node_used;
  AdditionalValues additional;
};

/// The event manager.
///
/// Order at each event time t: completions at t release resources; jobs
/// submitted at t join the queue (ties by job id); additional-data hooks run;
/// the dispatcher is called once if the queue is non-empty; the jobs it
/// starts get T_st = t and a completion event at t + duration.
class Simulator {
 public:
  Simulator(const SystemConfig& cfg, Dispatcher& dispatcher, SimulationOptions opts = {});

  void add_recorder(Recorder& recorder) { recorders_.push_back(&recorder); }
  void add_additional_data(AdditionalData& hook) { hooks_.push_back(&hook); }

  /// begin() + step() until done + finish().
  SimulationSummary run(JobSource& jobs);

  void begin(JobSource& jobs);
  bool done() const noexcept { return events_.empty(); }
  /// Processes the next event time. Precondition: !done().
  void step();
  SimulationSummary finish();

  /// Pulls jobs from the stream according to the load policy; returns how
  /// many became Loaded.
  std::size_t load_window();

  Seconds now() const noexcept { return now_; }
  const JobCounts& counts() const noexcept { return counts_; }
  const NodePool& pool() const noexcept { return pool_; }
  /// Job records resident in memory: loaded, queued, running, plus a peeked one.
  std::size_t retained() const noexcept;
  std::size_t unsubmitted() const noexcept { return loaded_.size(); }
  std::optional<JobState> state(JobId id) const;

  SystemView view() const;
  SystemSnapshot snapshot() const;
  /// "t\tqueued\trunning\tcompleted\tcore=0.5000,...\telapsed_ms"
  std::string status_line() const;

 private:
  struct Hidden {
    Seconds duration = 1;
    Seconds submit = 0;
    ResourceVector request;
  };

  std::optional<JobRecord> pull();
  void load(JobRecord job);
  void submit(JobRecord job);
  void complete(JobId id);
  void evict_completed(JobId id);
  void apply(const DispatchDecision& decision);
  void check_invariants() const;
  void emit_status();
  std::int64_t micros_since(std::chrono::steady_clock::time_point t0) const;

  SystemConfig cfg_;
  std::string config_hash_;
  Dispatcher& dispatcher_;
  SimulationOptions opts_;
  NodePool pool_;
  std::vector<Recorder*> recorders_;
  std::vector<AdditionalData*> hooks_;

  JobSource* source_ = nullptr;
  std::optional<JobRecord> peek_;
  bool exhausted_ = false;
  Seconds last_pulled_ = std::numeric_limits<Seconds>::min();

  Seconds now_ = 0;
  bool started_ = false;
  EventQueue events_;
  std::unordered_map<JobId, JobRecord> loaded_;
  std::vector<QueuedJob> queue_;
  std::vector<RunningJob> running_;
  std::unordered_map<JobId, std::size_t> running_index_;
  std::unordered_map<JobId, Hidden> hidden_;
  AdditionalValues additional_;

  JobCounts counts_;
  std::int64_t steps_ = 0;
  std::int64_t dispatches_ = 0;
  std::int64_t peak_loaded_ = 0;
  std::int64_t peak_queued_running_ = 0;
  std::int64_t peak_unsubmitted_ = 0;
  Seconds next_status_ = 0;
  std::chrono::steady_clock::time_point wall_start_;
};

}  // namespace wmsim
