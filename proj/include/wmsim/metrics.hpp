#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wmsim/job.hpp"

namespace wmsim {

struct DispatchDecision;
struct SystemView;

/// (wait + run) / run. `duration` >= 1 is guaranteed by ingest.
double slowdown(Seconds wait, Seconds duration);

/// Number of queued jobs at a dispatch point.
std::size_t queue_size_sample(const SystemView& view);

struct JobResult {
  JobId job_id = 0;
  Seconds submit = 0;
  Seconds start = 0;
  Seconds end = 0;
  Seconds wait = 0;
  Seconds duration = 1;
  double slowdown = 1.0;
  std::string nodes;  // semicolon-joined node ids
  ResourceVector request;  // per node

  friend bool operator==(const JobResult&, const JobResult&) = default;
};

/// One row per simulated event time.
struct StepBenchmark {
  Seconds time = 0;
  std::int64_t queued = 0;  // at dispatch; 0 when the dispatcher was not called
  std::int64_t running = 0;
  std::int64_t dispatch_us = 0;
  std::int64_t step_us = 0;
  std::int64_t loaded = 0;  // job records resident in memory

  friend bool operator==(const StepBenchmark&, const StepBenchmark&) = default;
};

struct RunFooter {
  std::uint64_t seed = 0;
  std::string dispatcher;
  std::string config_hash;
  std::int64_t wall_ms = 0;
  bool partial = false;
};

/// Observer of one simulation. Every hook has a no-op default.
class Recorder {
 public:
  virtual ~Recorder() = default;
  virtual void on_job_completed(const JobResult&) {}
  virtual void on_step(const StepBenchmark&) {}
  virtual void on_dispatch(Seconds /*now*/, const DispatchDecision&) {}
  virtual void on_finish(const RunFooter&) {}
};

/// `<run>.results.tsv`: '#'-prefixed header, one row per completed job,
/// '# end ...' footer.
class TsvResultsWriter : public Recorder {
 public:
  explicit TsvResultsWriter(std::ostream& out);
  void on_job_completed(const JobResult& r) override;
  void on_finish(const RunFooter& f) override;

 private:
  std::ostream& out_;
};

/// `<run>.bench.tsv`: one row per event time.
class TsvBenchWriter : public Recorder {
 public:
  explicit TsvBenchWriter(std::ostream& out);
  void on_step(const StepBenchmark& b) override;
  void on_finish(const RunFooter& f) override;

 private:
  std::ostream& out_;
};

std::string format_footer(const RunFooter& f);

/// Nearest-rank quantile of sorted data: element ceil(p * n) (1-based), p=0 -> min.
double nearest_rank(std::span<const double> sorted, double p);

/// Five-number summary plus mean and 1.5 x IQR whiskers.
struct BoxStats {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  double whisker_low = 0, whisker_high = 0;

  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

BoxStats describe(std::vector<double> values);

struct QueueBin {
  std::int64_t lower = 0;  // bin covers [lower, lower + 10)
  std::size_t samples = 0;
  double mean_dispatch_us = 0;

  friend bool operator==(const QueueBin&, const QueueBin&) = default;
};

inline constexpr std::int64_t kQueueBinWidth = 10;

struct SummaryReport {
  std::size_t jobs = 0;
  std::size_t steps = 0;
  std::size_t dispatches = 0;
  BoxStats slowdown;
  BoxStats queue_size;
  double mean_dispatch_us = 0;
  double mean_step_us = 0;
  std::int64_t total_dispatch_us = 0;
  std::vector<QueueBin> dispatch_by_queue;
  std::int64_t total_wall_ms = 0;
  std::int64_t peak_loaded = 0;
  double mean_loaded = 0;

  friend bool operator==(const SummaryReport&, const SummaryReport&) = default;
};

SummaryReport summarize(std::span<const JobResult> results, std::span<const StepBenchmark> bench,
                        std::int64_t wall_ms = 0);

/// Accumulates the same aggregates as summarize() without keeping rows.
class SummaryCollector : public Recorder {
 public:
  void on_job_completed(const JobResult& r) override;
  void on_step(const StepBenchmark& b) override;
  void on_finish(const RunFooter& f) override { wall_ms_ = f.wall_ms; }
  SummaryReport report() const;

 private:
  std::vector<double> slowdowns_;
  std::vector<double> queue_samples_;
  std::map<std::int64_t, std::pair<std::size_t, std::int64_t>> bins_;
  std::size_t steps_ = 0;
  std::int64_t dispatch_us_ = 0;
  std::int64_t step_us_ = 0;
  std::int64_t peak_loaded_ = 0;
  std::int64_t loaded_sum_ = 0;
  std::int64_t wall_ms_ = 0;
};

/// Readers for the TSV files; throw ParseError on malformed rows.
std::vector<JobResult> read_results_tsv(std::istream& in, RunFooter* footer = nullptr);
std::vector<StepBenchmark> read_bench_tsv(std::istream& in, RunFooter* footer = nullptr);

void write_summary_json(const SummaryReport& report, const RunFooter& footer, std::ostream& out);

}  // namespace wmsim
