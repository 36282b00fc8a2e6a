#include "wmsim/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "wmsim/errors.hpp"

namespace wmsim {

void EventQueue::push(Event e, Seconds clock) {
  if (e.time < clock) {
    throw std::logic_error("event for job " + std::to_string(e.job_id) + " at " + std::to_string(e.time) +
                           " precedes clock " + std::to_string(clock));
  }
  heap_.push(e);
}

std::vector<Event> EventQueue::pop_next() {
  std::vector<Event> out;
  if (heap_.empty()) return out;
  const Seconds t = heap_.top().time;
  while (!heap_.empty() && heap_.top().time == t) {
    out.push_back(heap_.top());
    heap_.pop();
  }
  return out;
}

Simulator::Simulator(const SystemConfig& cfg, Dispatcher& dispatcher, SimulationOptions opts)
    : cfg_(cfg), config_hash_(cfg.hash()), dispatcher_(dispatcher), opts_(opts), pool_(cfg) {
  if (opts_.load.amount < (opts_.load.kind == LoadPolicy::Kind::kCount ? 1 : 0)) {
    throw std::invalid_argument("load window must be positive");
  }
}

SimulationSummary Simulator::run(JobSource& jobs) {
  begin(jobs);
  while (!done()) step();
  return finish();
}

void Simulator::begin(JobSource& jobs) {
  if (started_) throw std::logic_error("Simulator::begin called twice");
  started_ = true;
  source_ = &jobs;
  wall_start_ = std::chrono::steady_clock::now();
  if (opts_.status && opts_.status_interval > 0) {
    *opts_.status << "# time\tqueued\trunning\tcompleted\tutilization\telapsed_ms\n";
  }
  load_window();
  peak_unsubmitted_ = std::max<std::int64_t>(peak_unsubmitted_, static_cast<std::int64_t>(loaded_.size()));
  peak_loaded_ = std::max<std::int64_t>(peak_loaded_, static_cast<std::int64_t>(retained()));
}

std::optional<JobRecord> Simulator::pull() {
  if (peek_) {
    auto r = std::move(peek_);
    peek_.reset();
    return r;
  }
  if (exhausted_ || !source_) return std::nullopt;
  auto r = source_->next();
  if (!r) {
    exhausted_ = true;
  } else {
    if (r->submit_time < last_pulled_) {
      throw OrderError(counts_.read + 1, "job stream went back in time at job " + std::to_string(r->job_id));
    }
    last_pulled_ = r->submit_time;
  }
  return r;
}

void Simulator::load(JobRecord job) {
  const JobId id = job.job_id;
  const Seconds t = job.submit_time;
  if (!loaded_.emplace(id, std::move(job)).second || hidden_.count(id)) {
    throw DispatchError("job id " + std::to_string(id) + " loaded twice");
  }
  events_.push(Event{t, EventKind::kSubmission, id}, now_);
  ++counts_.read;
  ++counts_.loaded;
}

std::size_t Simulator::load_window() {
  std::size_t added = 0;
  if (opts_.load.kind == LoadPolicy::Kind::kCount) {
    while (loaded_.size() < static_cast<std::size_t>(opts_.load.amount)) {
      auto r = pull();
      if (!r) break;
      load(std::move(*r));
      ++added;
    }
    return added;
  }
  while (true) {
    auto r = pull();
    if (!r) break;
    if (!loaded_.empty() && r->submit_time > now_ + opts_.load.amount) {
      peek_ = std::move(r);
      break;
    }
    load(std::move(*r));
    ++added;
  }
  return added;
}

std::size_t Simulator::retained() const noexcept {
  return loaded_.size() + queue_.size() + running_.size() + (peek_ ? 1 : 0);
}

std::optional<JobState> Simulator::state(JobId id) const {
  if (loaded_.count(id)) return JobState::kLoaded;
  if (running_index_.count(id)) return JobState::kRunning;
  if (hidden_.count(id)) return JobState::kQueued;
  return std::nullopt;
}

void Simulator::submit(JobRecord job) {
  auto dense = pool_.types().densify(job.per_node_request);
  if (!dense || !pool_.satisfiable(job.requested_nodes, *dense)) {
    ++counts_.rejected;
    return;
  }
  queue_.push_back(QueuedJob{job.job_id, job.submit_time, job.wall_time_estimate, job.requested_nodes,
                             std::move(*dense)});
  hidden_[job.job_id] = Hidden{job.duration, job.submit_time, std::move(job.per_node_request)};
  ++counts_.queued;
}

void Simulator::complete(JobId id) {
  auto it = running_index_.find(id);
  if (it == running_index_.end()) throw std::logic_error("completion for job " + std::to_string(id) + " not running");
  const std::size_t idx = it->second;
  RunningJob job = std::move(running_[idx]);
  if (idx + 1 != running_.size()) {
    running_[idx] = std::move(running_.back());
    running_index_[running_[idx].id] = idx;
  }
  running_.pop_back();
  running_index_.erase(id);
  pool_.release(job.allocation);
  --counts_.running;
  ++counts_.completed;

  const Hidden& h = hidden_.at(id);
  JobResult r;
  r.job_id = id;
  r.start = job.start_time;
  r.duration = h.duration;
  r.end = job.start_time + h.duration;
  r.submit = h.submit;
  r.wait = r.start - r.submit;
  r.slowdown = slowdown(r.wait, r.duration);
  r.nodes = pool_.format_nodes(job.allocation);
  r.request = h.request;
  for (auto* rec : recorders_) rec->on_job_completed(r);
  evict_completed(id);
}

void Simulator::evict_completed(JobId id) {
  if (running_index_.count(id) || loaded_.count(id)) {
    throw std::logic_error("evicting job " + std::to_string(id) + " that has not completed");
  }
  hidden_.erase(id);
}

void Simulator::apply(const DispatchDecision& decision) {
  if (decision.starts.empty()) return;
  // Started jobs are usually near the front, so stop scanning once all are found.
  std::unordered_map<JobId, std::size_t> position;
  for (const auto& alloc : decision.starts) position.emplace(alloc.job_id, queue_.size());
  std::size_t found = 0;
  std::size_t first = queue_.size();
  for (std::size_t i = 0; i < queue_.size() && found < position.size(); ++i) {
    auto it = position.find(queue_[i].id);
    if (it == position.end()) continue;
    it->second = i;
    first = std::min(first, i);
    ++found;
  }
  std::erase_if(position, [&](const auto& kv) { return kv.second == queue_.size(); });

  std::unordered_set<JobId> started;
  for (const auto& alloc : decision.starts) {
    auto it = position.find(alloc.job_id);
    if (it == position.end()) throw DispatchError("dispatcher started job " + std::to_string(alloc.job_id) + " which is not queued");
    if (!started.insert(alloc.job_id).second) {
      throw DispatchError("dispatcher started job " + std::to_string(alloc.job_id) + " twice");
    }
    const QueuedJob& q = queue_[it->second];
    if (static_cast<std::int64_t>(alloc.nodes.size()) != q.requested_nodes || alloc.per_node != q.per_node) {
      throw DispatchError("allocation for job " + std::to_string(alloc.job_id) + " does not match its request");
    }
    try {
      pool_.allocate(alloc);
    } catch (const OversubscriptionError& e) {
      throw DispatchError(std::string("infeasible start: ") + e.what());
    }
    running_index_[alloc.job_id] = running_.size();
    running_.push_back(RunningJob{alloc.job_id, now_, q.wall_time_estimate, alloc});
    events_.push(Event{now_ + hidden_.at(alloc.job_id).duration, EventKind::kCompletion, alloc.job_id}, now_);
    --counts_.queued;
    ++counts_.running;
  }
  queue_.erase(std::remove_if(queue_.begin() + static_cast<std::ptrdiff_t>(first), queue_.end(),
                              [&](const QueuedJob& q) { return started.count(q.id) > 0; }),
               queue_.end());
}

std::int64_t Simulator::micros_since(std::chrono::steady_clock::time_point t0) const {
  if (!opts_.measure_time) return 0;
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count();
}

void Simulator::step() {
  if (done()) throw std::logic_error("Simulator::step with no pending events");
  const auto step_t0 = std::chrono::steady_clock::now();
  auto events = events_.pop_next();
  now_ = events.front().time;

  for (const auto& e : events) {
    if (e.kind == EventKind::kCompletion) complete(e.job_id);
  }

  std::vector<JobRecord> arriving;
  for (const auto& e : events) {
    if (e.kind != EventKind::kSubmission) continue;
    auto node = loaded_.extract(e.job_id);
    --counts_.loaded;
    arriving.push_back(std::move(node.mapped()));
  }
  // Jobs sharing this second that are still in the stream arrive now too.
  while (auto r = pull()) {
    if (r->submit_time != now_) {
      if (r->submit_time < now_) throw OrderError(0, "job stream went back in time at job " + std::to_string(r->job_id));
      if (opts_.load.kind == LoadPolicy::Kind::kCount &&
          loaded_.size() < static_cast<std::size_t>(opts_.load.amount)) {
        load(std::move(*r));
      } else {
        peek_ = std::move(r);
      }
      break;
    }
    ++counts_.read;
    arriving.push_back(std::move(*r));
  }
  std::sort(arriving.begin(), arriving.end(), [](const JobRecord& a, const JobRecord& b) { return a.job_id < b.job_id; });
  for (auto& job : arriving) submit(std::move(job));

  load_window();

  const SystemView v = view();
  for (auto* hook : hooks_) hook->update(v, additional_);

  StepBenchmark bench;
  bench.time = now_;
  if (!queue_.empty()) {
    bench.queued = static_cast<std::int64_t>(queue_size_sample(view()));
    const auto t0 = std::chrono::steady_clock::now();
    DispatchDecision decision = dispatcher_.dispatch(view());
    bench.dispatch_us = micros_since(t0);
    ++dispatches_;
    apply(decision);
    for (auto* rec : recorders_) rec->on_dispatch(now_, decision);
  }
  bench.running = static_cast<std::int64_t>(running_.size());
  bench.loaded = static_cast<std::int64_t>(retained());
  ++steps_;

  peak_loaded_ = std::max(peak_loaded_, bench.loaded);
  peak_unsubmitted_ = std::max<std::int64_t>(peak_unsubmitted_, static_cast<std::int64_t>(loaded_.size()));
  peak_queued_running_ =
      std::max<std::int64_t>(peak_queued_running_, static_cast<std::int64_t>(queue_.size() + running_.size()));
  check_invariants();

  if (opts_.status && opts_.status_interval > 0 && now_ >= next_status_) {
    emit_status();
    next_status_ = now_ + opts_.status_interval;
  }
  bench.step_us = std::max(micros_since(step_t0), bench.dispatch_us);
  for (auto* rec : recorders_) rec->on_step(bench);
}

void Simulator::check_invariants() const {
  if (!counts_.conserved()) throw std::logic_error("job lifecycle counts not conserved");
  if (counts_.queued != queue_.size() || counts_.running != running_.size() || counts_.loaded != loaded_.size()) {
    throw std::logic_error("job state counters out of sync");
  }
  if (!pool_.consistent()) throw OversubscriptionError("node usage outside [0, capacity]");
}

SystemView Simulator::view() const {
  return SystemView{now_, queue_, running_, &pool_, &additional_, opts_.seed};
}

SystemSnapshot Simulator::snapshot() const {
  SystemSnapshot s;
  s.now = now_;
  s.queue = queue_;
  s.running = running_;
  for (std::size_t n = 0; n < pool_.size(); ++n) {
    s.node_free.push_back(pool_.free_vector(n));
    s.node_used.push_back(pool_.used_vector(n));
  }
  s.additional = additional_;
  return s;
}

std::string Simulator::status_line() const {
  std::string util;
  for (const auto& u : pool_.utilization()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%s=%.4f", util.empty() ? "" : ",", u.type.c_str(), u.ratio);
    util += buf;
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - wall_start_).count();
  return std::to_string(now_) + '\t' + std::to_string(counts_.queued) + '\t' + std::to_string(counts_.running) + '\t' +
         std::to_string(counts_.completed) + '\t' + util + '\t' + std::to_string(elapsed);
}

void Simulator::emit_status() { *opts_.status << status_line() << '\n'; }

SimulationSummary Simulator::finish() {
  if (!done()) throw std::logic_error("Simulator::finish with pending events");
  SimulationSummary s;
  s.dispatcher = dispatcher_.name();
  s.seed = opts_.seed;
  s.config_hash = config_hash_;
  s.counts = counts_;
  s.steps = steps_;
  s.dispatches = dispatches_;
  s.final_time = cfg_.start_time + now_;
  s.peak_loaded = peak_loaded_;
  s.peak_queued_running = peak_queued_running_;
  s.peak_unsubmitted = peak_unsubmitted_;
  s.retained_at_end = retained();
  s.wall_ms = opts_.measure_time ? std::chrono::duration_cast<std::chrono::milliseconds>(
                                       std::chrono::steady_clock::now() - wall_start_)
                                       .count()
                                 : 0;
  if (opts_.status && opts_.status_interval > 0) emit_status();
  const RunFooter footer{s.seed, s.dispatcher, s.config_hash, s.wall_ms, false};
  for (auto* rec : recorders_) rec->on_finish(footer);
  return s;
}

}  // namespace wmsim
