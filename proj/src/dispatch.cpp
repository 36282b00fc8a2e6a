#include "wmsim/dispatch.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace wmsim {

CapacityLedger::CapacityLedger(const NodePool& pool) : nodes_(pool.size()), width_(pool.type_count()) {
  capacity_.reserve(nodes_ * width_);
  free_.reserve(nodes_ * width_);
  for (std::size_t n = 0; n < nodes_; ++n) {
    const auto cap = pool.capacity(n);
    const auto used = pool.used(n);
    for (std::size_t r = 0; r < width_; ++r) {
      capacity_.push_back(cap[r]);
      free_.push_back(cap[r] - used[r]);
    }
  }
}

bool CapacityLedger::fits(std::size_t node, std::span<const Quantity> per_node) const {
  const Quantity* f = free_.data() + node * width_;
  for (std::size_t r = 0; r < width_; ++r) {
    if (per_node[r] > f[r]) return false;
  }
  return true;
}

void CapacityLedger::take(std::span<const std::uint32_t> nodes, std::span<const Quantity> per_node) {
  for (auto n : nodes) {
    for (std::size_t r = 0; r < width_; ++r) free_[n * width_ + r] -= per_node[r];
  }
}

void CapacityLedger::give(std::span<const std::uint32_t> nodes, std::span<const Quantity> per_node) {
  for (auto n : nodes) {
    for (std::size_t r = 0; r < width_; ++r) free_[n * width_ + r] += per_node[r];
  }
}

double CapacityLedger::load(std::size_t node, std::span<const Quantity> request) const {
  double sum = 0.0;
  int terms = 0;
  for (std::size_t r = 0; r < width_; ++r) {
    if (request[r] <= 0) continue;
    const auto cap = capacity(node, r);
    sum += cap > 0 ? static_cast<double>(cap - free(node, r)) / static_cast<double>(cap) : 1.0;
    ++terms;
  }
  return terms ? sum / terms : 0.0;
}

std::optional<Allocation> Allocator::allocate(const QueuedJob& job, const CapacityLedger& ledger) const {
  auto nodes = place(job.requested_nodes, job.per_node, ledger);
  if (!nodes) return std::nullopt;
  return Allocation{job.id, std::move(*nodes), job.per_node};
}

std::optional<std::vector<std::uint32_t>> FirstFit::place(std::int64_t nodes, std::span<const Quantity> per_node,
                                                          const CapacityLedger& ledger) const {
  if (nodes < 1 || static_cast<std::size_t>(nodes) > ledger.nodes()) return std::nullopt;
  std::vector<std::uint32_t> chosen;
  chosen.reserve(static_cast<std::size_t>(nodes));
  for (std::size_t n = 0; n < ledger.nodes(); ++n) {
    if (ledger.fits(n, per_node)) {
      chosen.push_back(static_cast<std::uint32_t>(n));
      if (static_cast<std::int64_t>(chosen.size()) == nodes) return chosen;
    }
  }
  return std::nullopt;
}

std::optional<std::vector<std::uint32_t>> BestFit::place(std::int64_t nodes, std::span<const Quantity> per_node,
                                                         const CapacityLedger& ledger) const {
  if (nodes < 1 || static_cast<std::size_t>(nodes) > ledger.nodes()) return std::nullopt;
  std::vector<std::pair<double, std::uint32_t>> order;
  order.reserve(ledger.nodes());
  for (std::size_t n = 0; n < ledger.nodes(); ++n) {
    if (ledger.fits(n, per_node)) order.emplace_back(ledger.load(n, per_node), static_cast<std::uint32_t>(n));
  }
  if (static_cast<std::int64_t>(order.size()) < nodes) return std::nullopt;
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::uint32_t> chosen;
  chosen.reserve(static_cast<std::size_t>(nodes));
  for (std::int64_t i = 0; i < nodes; ++i) chosen.push_back(order[static_cast<std::size_t>(i)].second);
  return chosen;
}

namespace {

std::vector<std::size_t> fifo_indices(std::span<const QueuedJob> queue) {
  std::vector<std::size_t> idx(queue.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return std::tie(queue[a].submit_time, queue[a].id) < std::tie(queue[b].submit_time, queue[b].id);
  };
  if (!std::is_sorted(idx.begin(), idx.end(), before)) std::stable_sort(idx.begin(), idx.end(), before);
  return idx;
}

}  // namespace

std::string OrderedScheduler::name() const {
  switch (order_) {
    case QueueOrder::kShortestFirst:
      return "SJF";
    case QueueOrder::kLongestFirst:
      return "LJF";
    case QueueOrder::kFifo:
      break;
  }
  return "FIFO";
}

DispatchDecision OrderedScheduler::schedule(const SystemView& view, const Allocator& allocator) {
  DispatchDecision decision;
  if (view.queue.empty()) return decision;
  const auto& q = view.queue;
  CapacityLedger ledger(*view.pool);
  auto place = [&](const QueuedJob& job) {
    auto alloc = allocator.allocate(job, ledger);
    if (!alloc) return false;
    ledger.take(alloc->nodes, alloc->per_node);
    decision.starts.push_back(std::move(*alloc));
    return true;
  };
  // The view already holds the queue in FIFO order.
  if (order_ == QueueOrder::kFifo) {
    for (const auto& job : q) {
      if (!place(job) && !skip_) break;
    }
    return decision;
  }
  auto idx = fifo_indices(q);
  if (order_ == QueueOrder::kShortestFirst) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return q[a].wall_time_estimate < q[b].wall_time_estimate; });
  } else if (order_ == QueueOrder::kLongestFirst) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return q[a].wall_time_estimate > q[b].wall_time_estimate; });
  }

  for (auto i : idx) {
    if (!place(q[i]) && !skip_) break;
  }
  return decision;
}

namespace {

struct Release {
  Seconds time;
  JobId id;
  const std::vector<std::uint32_t>* nodes;
  const Quantities* per_node;
};

constexpr Quantity kUnbounded = std::numeric_limits<Quantity>::max();

}  // namespace

DispatchDecision EasyBackfillScheduler::schedule(const SystemView& view, const Allocator& allocator) {
  DispatchDecision decision;
  if (view.queue.empty()) return decision;
  const auto& q = view.queue;
  const auto idx = fifo_indices(q);
  CapacityLedger now(*view.pool);

  // Start jobs in FIFO order while they fit.
  std::size_t pos = 0;
  for (; pos < idx.size(); ++pos) {
    auto alloc = allocator.allocate(q[idx[pos]], now);
    if (!alloc) break;
    now.take(alloc->nodes, alloc->per_node);
    decision.starts.push_back(std::move(*alloc));
  }
  if (pos == idx.size()) return decision;

  // Reservation for the blocked head: replay estimated releases until it fits.
  const QueuedJob& head = q[idx[pos]];
  std::vector<Release> releases;
  releases.reserve(view.running.size() + decision.starts.size());
  for (const auto& r : view.running) {
    releases.push_back({std::max(r.start_time + r.wall_time_estimate, view.now), r.id, &r.allocation.nodes,
                        &r.allocation.per_node});
  }
  for (std::size_t s = 0; s < pos; ++s) {
    const auto& a = decision.starts[s];
    releases.push_back({view.now + q[idx[s]].wall_time_estimate, a.job_id, &a.nodes, &a.per_node});
  }
  std::sort(releases.begin(), releases.end(),
            [](const Release& a, const Release& b) { return std::tie(a.time, a.id) < std::tie(b.time, b.id); });

  CapacityLedger projected = now;
  std::optional<Reservation> reservation;
  for (std::size_t i = 0; i < releases.size() && !reservation;) {
    const Seconds t = releases[i].time;
    for (; i < releases.size() && releases[i].time == t; ++i) projected.give(*releases[i].nodes, *releases[i].per_node);
    if (auto nodes = allocator.place(head.requested_nodes, head.per_node, projected)) {
      reservation = Reservation{head.id, t, std::move(*nodes)};
    }
  }
  if (!reservation) return decision;  // head can never fit; nothing to protect

  // What reserved nodes can spare past the reservation time.
  const std::size_t width = now.types();
  std::vector<Quantity> extra(now.nodes() * width, kUnbounded);
  std::vector<bool> reserved(now.nodes(), false);
  for (auto n : reservation->nodes) {
    reserved[n] = true;
    for (std::size_t r = 0; r < width; ++r) extra[n * width + r] = projected.free(n, r) - head.per_node[r];
  }
  CapacityLedger shadow = now;
  auto refresh = [&](std::uint32_t n) {
    for (std::size_t r = 0; r < width; ++r) shadow.set_free(n, r, std::min(now.free(n, r), extra[n * width + r]));
  };
  for (auto n : reservation->nodes) refresh(n);

  // Ledgers only shrink during the scan, so a shape that failed once keeps failing.
  std::set<std::tuple<bool, std::int64_t, Quantities>> failed;
  for (std::size_t p = pos + 1; p < idx.size(); ++p) {
    const QueuedJob& job = q[idx[p]];
    const bool ends_before = view.now + job.wall_time_estimate <= reservation->time;
    auto key = std::make_tuple(ends_before, job.requested_nodes, job.per_node);
    if (failed.count(key)) continue;
    auto alloc = allocator.allocate(job, ends_before ? now : shadow);
    if (!alloc) {
      failed.insert(std::move(key));
      continue;
    }
    now.take(alloc->nodes, alloc->per_node);
    for (auto n : alloc->nodes) {
      if (!ends_before && reserved[n]) {
        for (std::size_t r = 0; r < width; ++r) extra[n * width + r] -= alloc->per_node[r];
      }
      refresh(n);
    }
    decision.starts.push_back(std::move(*alloc));
  }
  decision.reservation = std::move(reservation);
  return decision;
}

namespace {

std::string composed_name(const Scheduler* s, const Allocator* a) {
  if (!s || !a) throw std::invalid_argument("Dispatcher needs a scheduler and an allocator");
  return s->name() + "-" + a->name();
}

}  // namespace

Dispatcher::Dispatcher(std::unique_ptr<Scheduler> scheduler, std::unique_ptr<Allocator> allocator)
    : scheduler_(std::move(scheduler)), allocator_(std::move(allocator)) {
  name_ = composed_name(scheduler_.get(), allocator_.get());
}

Dispatcher::Dispatcher(std::string name, std::unique_ptr<Scheduler> scheduler, std::unique_ptr<Allocator> allocator)
    : name_(std::move(name)), scheduler_(std::move(scheduler)), allocator_(std::move(allocator)) {
  if (!scheduler_ || !allocator_) throw std::invalid_argument("Dispatcher needs a scheduler and an allocator");
}

std::unique_ptr<Dispatcher> compose(std::unique_ptr<Scheduler> scheduler, std::unique_ptr<Allocator> allocator) {
  return std::make_unique<Dispatcher>(std::move(scheduler), std::move(allocator));
}

DispatcherRegistry DispatcherRegistry::with_builtins() {
  DispatcherRegistry reg;
  reg.add_scheduler("FIFO", [](const DispatchOptions& o) {
    return std::make_unique<OrderedScheduler>(QueueOrder::kFifo, o.fifo_skip);
  });
  reg.add_scheduler("SJF", [](const DispatchOptions& o) {
    return std::make_unique<OrderedScheduler>(QueueOrder::kShortestFirst, o.fifo_skip);
  });
  reg.add_scheduler("LJF", [](const DispatchOptions& o) {
    return std::make_unique<OrderedScheduler>(QueueOrder::kLongestFirst, o.fifo_skip);
  });
  reg.add_scheduler("EBF", [](const DispatchOptions&) { return std::make_unique<EasyBackfillScheduler>(); });
  reg.add_allocator("FF", [] { return std::make_unique<FirstFit>(); });
  reg.add_allocator("BF", [] { return std::make_unique<BestFit>(); });
  return reg;
}

namespace {

template <typename Table>
auto find_entry(Table& table, std::string_view name) {
  return std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == name; });
}

template <typename Table, typename F>
void upsert(Table& table, std::string name, F f) {
  if (auto it = find_entry(table, name); it != table.end()) {
    it->second = std::move(f);
  } else {
    table.emplace_back(std::move(name), std::move(f));
  }
}

}  // namespace

void DispatcherRegistry::add_scheduler(std::string name, SchedulerFactory f) { upsert(schedulers_, std::move(name), std::move(f)); }
void DispatcherRegistry::add_allocator(std::string name, AllocatorFactory f) { upsert(allocators_, std::move(name), std::move(f)); }
void DispatcherRegistry::add_dispatcher(std::string name, DispatcherFactory f) {
  upsert(dispatchers_, std::move(name), std::move(f));
}

std::unique_ptr<Dispatcher> DispatcherRegistry::make(std::string_view scheduler, std::string_view allocator,
                                                     const DispatchOptions& opts) const {
  auto s = find_entry(schedulers_, scheduler);
  auto a = find_entry(allocators_, allocator);
  if (s == schedulers_.end() || a == allocators_.end()) return nullptr;
  return std::make_unique<Dispatcher>(std::string(scheduler) + "-" + std::string(allocator), s->second(opts), a->second());
}

std::unique_ptr<Dispatcher> DispatcherRegistry::make(std::string_view name, const DispatchOptions& opts) const {
  if (auto d = find_entry(dispatchers_, name); d != dispatchers_.end()) return d->second(opts);
  for (auto dash = name.find('-'); dash != std::string_view::npos; dash = name.find('-', dash + 1)) {
    if (auto d = make(name.substr(0, dash), name.substr(dash + 1), opts)) return d;
  }
  std::string known;
  for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
  throw std::out_of_range("unknown dispatcher '" + std::string(name) + "'; registered: " + known);
}

bool DispatcherRegistry::contains(std::string_view name) const {
  const auto all = names();
  return std::find(all.begin(), all.end(), name) != all.end();
}

std::vector<std::string> DispatcherRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [s, sf] : schedulers_) {
    for (const auto& [a, af] : allocators_) out.push_back(s + "-" + a);
  }
  for (const auto& [d, df] : dispatchers_) out.push_back(d);
  return out;
}

std::vector<std::string> DispatcherRegistry::scheduler_names() const {
  std::vector<std::string> out;
  for (const auto& e : schedulers_) out.push_back(e.first);
  return out;
}

std::vector<std::string> DispatcherRegistry::allocator_names() const {
  std::vector<std::string> out;
  for (const auto& e : allocators_) out.push_back(e.first);
  return out;
}

}  // namespace wmsim
