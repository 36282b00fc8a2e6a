#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmsim/job.hpp"
#include "wmsim/system.hpp"

namespace wmsim {

/// A waiting job as dispatchers see it. There is deliberately no duration
/// field: only the user's wall-time estimate is visible.
struct QueuedJob {
  JobId id = 0;
  Seconds submit_time = 0;
  Seconds wall_time_estimate = 1;
  std::int64_t requested_nodes = 1;
  Quantities per_node;  // pool ResourceTypes order
};

struct RunningJob {
  JobId id = 0;
  Seconds start_time = 0;
  Seconds wall_time_estimate = 1;
  Allocation allocation;
};

using AdditionalValues = std::map<std::string, double, std::less<>>;

/// Read-only state handed to a dispatcher at one event time. Spans point
/// into simulator storage and are valid for the duration of the call only.
struct SystemView {
  Seconds now = 0;
  std::span<const QueuedJob> queue;  // FIFO order: (submit_time, id)
  std::span<const RunningJob> running;
  const NodePool* pool = nullptr;
  const AdditionalValues* additional = nullptr;
  std::uint64_t seed = 0;
};

/// Scratch copy of free capacities. Schedulers apply tentative placements
/// here so a decision is jointly feasible by construction.
class CapacityLedger {
 public:
  explicit CapacityLedger(const NodePool& pool);

  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t types() const noexcept { return width_; }
  Quantity free(std::size_t node, std::size_t type) const { return free_[node * width_ + type]; }
  Quantity capacity(std::size_t node, std::size_t type) const { return capacity_[node * width_ + type]; }
  void set_free(std::size_t node, std::size_t type, Quantity q) { free_[node * width_ + type] = q; }

  bool fits(std::size_t node, std::span<const Quantity> per_node) const;
  void take(std::span<const std::uint32_t> nodes, std::span<const Quantity> per_node);
  void give(std::span<const std::uint32_t> nodes, std::span<const Quantity> per_node);

  /// Mean used/capacity over the resource types `request` asks for.
  double load(std::size_t node, std::span<const Quantity> request) const;

 private:
  std::size_t nodes_ = 0;
  std::size_t width_ = 0;
  Quantities capacity_;
  Quantities free_;
};

/// Placement policy: which nodes a job would occupy given free capacities.
class Allocator {
 public:
  virtual ~Allocator() = default;
  virtual std::string name() const = 0;
  /// Exactly `nodes` distinct node indices that each fit `per_node`, or
  /// nullopt when no such set exists.
  virtual std::optional<std::vector<std::uint32_t>> place(std::int64_t nodes, std::span<const Quantity> per_node,
                                                          const CapacityLedger& ledger) const = 0;

  std::optional<Allocation> allocate(const QueuedJob& job, const CapacityLedger& ledger) const;
};

/// FF: nodes in pool order, first ones that fit.
class FirstFit : public Allocator {
 public:
  std::string name() const override { return "FF"; }
  std::optional<std::vector<std::uint32_t>> place(std::int64_t nodes, std::span<const Quantity> per_node,
                                                  const CapacityLedger& ledger) const override;
};

/// BF: busiest nodes first (load descending, ties by pool order), then first fit.
class BestFit : public Allocator {
 public:
  std::string name() const override { return "BF"; }
  std::optional<std::vector<std::uint32_t>> place(std::int64_t nodes, std::span<const Quantity> per_node,
                                                  const CapacityLedger& ledger) const override;
};

/// Resources held for the blocked queue head by a backfilling scheduler.
struct Reservation {
  JobId job_id = 0;
  Seconds time = 0;
  std::vector<std::uint32_t> nodes;
};

struct DispatchDecision {
  std::vector<Allocation> starts;  // applied in order
  std::optional<Reservation> reservation;
};

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  virtual DispatchDecision schedule(const SystemView& view, const Allocator& allocator) = 0;
};

enum class QueueOrder { kFifo, kShortestFirst, kLongestFirst };

/// FIFO, SJF and LJF: sort the queue, then start jobs in order until one
/// does not fit. With `skip_blocked` unplaceable jobs are passed over instead.
class OrderedScheduler : public Scheduler {
 public:
  explicit OrderedScheduler(QueueOrder order, bool skip_blocked = false) : order_(order), skip_(skip_blocked) {}
  std::string name() const override;
  DispatchDecision schedule(const SystemView& view, const Allocator& allocator) override;

 private:
  QueueOrder order_;
  bool skip_;
};

/// EASY backfilling over a FIFO queue with a single reservation for the
/// first job that does not fit.
class EasyBackfillScheduler : public Scheduler {
 public:
  std::string name() const override { return "EBF"; }
  DispatchDecision schedule(const SystemView& view, const Allocator& allocator) override;
};

/// Scheduler + allocator pair, named "SCHED-ALLOC".
class Dispatcher {
 public:
  Dispatcher(std::unique_ptr<Scheduler> scheduler, std::unique_ptr<Allocator> allocator);
  Dispatcher(std::string name, std::unique_ptr<Scheduler> scheduler, std::unique_ptr<Allocator> allocator);

  const std::string& name() const noexcept { return name_; }
  DispatchDecision dispatch(const SystemView& view) { return scheduler_->schedule(view, *allocator_); }
  const Allocator& allocator() const noexcept { return *allocator_; }

 private:
  std::string name_;
  std::unique_ptr<Scheduler> scheduler_;
  std::unique_ptr<Allocator> allocator_;
};

std::unique_ptr<Dispatcher> compose(std::unique_ptr<Scheduler> scheduler, std::unique_ptr<Allocator> allocator);

struct DispatchOptions {
  bool fifo_skip = false;  // applies to FIFO, SJF, LJF
};

/// Name -> factory tables. Built-in schedulers FIFO/SJF/LJF/EBF and
/// allocators FF/BF combine into "SCHED-ALLOC" names; user code may add more
/// parts or whole dispatchers under any name.
class DispatcherRegistry {
 public:
  using SchedulerFactory = std::function<std::unique_ptr<Scheduler>(const DispatchOptions&)>;
  using AllocatorFactory = std::function<std::unique_ptr<Allocator>()>;
  using DispatcherFactory = std::function<std::unique_ptr<Dispatcher>(const DispatchOptions&)>;

  static DispatcherRegistry with_builtins();

  void add_scheduler(std::string name, SchedulerFactory f);
  void add_allocator(std::string name, AllocatorFactory f);
  void add_dispatcher(std::string name, DispatcherFactory f);

  bool contains(std::string_view name) const;
  /// Throws std::out_of_range listing the registered names.
  std::unique_ptr<Dispatcher> make(std::string_view name, const DispatchOptions& opts = {}) const;
  std::unique_ptr<Dispatcher> make(std::string_view scheduler, std::string_view allocator,
                                   const DispatchOptions& opts = {}) const;

  /// Every scheduler x allocator combination, then custom dispatchers.
  std::vector<std::string> names() const;
  std::vector<std::string> scheduler_names() const;
  std::vector<std::string> allocator_names() const;

 private:
  std::vector<std::pair<std::string, SchedulerFactory>> schedulers_;
  std::vector<std::pair<std::string, AllocatorFactory>> allocators_;
  std::vector<std::pair<std::string, DispatcherFactory>> dispatchers_;
};

}  // namespace wmsim
