#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wmsim/job.hpp"
#include "wmsim/system.hpp"

namespace wmsim {

/// Source of submit-ordered job records. The simulator pulls from it lazily.
class JobSource {
 public:
  virtual ~JobSource() = default;
  /// Next record, or nullopt at end of stream.
  virtual std::optional<JobRecord> next() = 0;
};

/// In-memory source, mostly for tests and the generator.
class VectorSource : public JobSource {
 public:
  explicit VectorSource(std::vector<JobRecord> jobs) : jobs_(std::move(jobs)) {}
  std::optional<JobRecord> next() override {
    if (pos_ >= jobs_.size()) return std::nullopt;
    return jobs_[pos_++];
  }

 private:
  std::vector<JobRecord> jobs_;
  std::size_t pos_ = 0;
};

/// Sink for job records; SwfWriter is the built-in implementation.
class WorkloadWriter {
 public:
  virtual ~WorkloadWriter() = default;
  virtual void write(const JobRecord& job) = 0;
  virtual void finish() {}
};

/// How SWF processor/memory columns turn into per-node machine resources.
struct IngestRules {
  Equivalence processor{"core", 1};
  /// Requested memory (SWF: KB per processor). Absent: memory column ignored.
  std::optional<Equivalence> memory;
  Quantity cores_per_node = 1;

  /// processor -> equivalence["processor"] (default core x1); memory ->
  /// equivalence["memory"], else "mem" x1 when the machine has a mem type;
  /// cores_per_node -> the largest per-node count of the processor resource.
  static IngestRules from_config(const SystemConfig& cfg);
};

struct NodeSplit {
  std::int64_t nodes = 1;
  Quantity per_node = 1;

  friend bool operator==(const NodeSplit&, const NodeSplit&) = default;
};

/// nodes = ceil(total / cores_per_node), per_node = ceil(total / nodes).
/// Both arguments must be >= 1 (std::invalid_argument otherwise).
NodeSplit map_processors_to_nodes(Quantity total_units, Quantity cores_per_node);

/// The 18 SWF columns, 0-based.
enum SwfColumn : std::size_t {
  kJobNumber = 0,
  kSubmitTime,
  kWaitTime,
  kRunTime,
  kAllocatedProcessors,
  kAverageCpuTime,
  kUsedMemory,
  kRequestedProcessors,
  kRequestedTime,
  kRequestedMemory,
  kStatus,
  kUserId,
  kGroupId,
  kExecutable,
  kQueue,
  kPartition,
  kPrecedingJob,
  kThinkTime,
  kSwfColumns
};

using SwfLine = std::array<std::int64_t, kSwfColumns>;

/// Splits and converts one data line. Throws ParseError(line_no) on a wrong
/// field count or a non-numeric field. Columns the simulator never reads
/// (average CPU time, used memory) may hold decimals; they are truncated.
SwfLine parse_swf_line(std::string_view text, std::size_t line_no);

struct SwfStats {
  std::size_t lines = 0;
  std::size_t comment_lines = 0;
  std::size_t data_lines = 0;
  std::size_t accepted = 0;
  std::size_t skipped_runtime = 0;     // run time < 0
  std::size_t skipped_processors = 0;  // processors <= 0
  std::size_t skipped_submit = 0;      // submit < 0
  std::size_t skipped_job_id = 0;      // job number <= 0
  std::size_t skipped() const { return skipped_runtime + skipped_processors + skipped_submit + skipped_job_id; }
};

/// Streaming SWF reader. Materializes at most one record at a time.
///
/// Filter rules: run time < 0, processors <= 0 or submit < 0 skip the line
/// (counted in stats()); run time 0 is coerced to 1; a missing or zero
/// requested time becomes the run time. Jobs of every status code are kept.
class SwfReader : public JobSource {
 public:
  SwfReader(std::istream& in, IngestRules rules);

  std::optional<JobRecord> next() override;
  const SwfStats& stats() const noexcept { return stats_; }

  /// Maps an already split line; nullopt when the filter rejects it.
  std::optional<JobRecord> to_record(const SwfLine& line);

 private:
  std::istream& in_;
  IngestRules rules_;
  SwfStats stats_;
  Seconds last_submit_ = 0;
  std::unordered_set<JobId> seen_ids_;
};

/// Opens `path` and reads it to the end.
std::vector<JobRecord> read_swf_file(const std::filesystem::path& path, const IngestRules& rules,
                                     SwfStats* stats = nullptr);

/// Writes 18-column SWF lines; the inverse of SwfReader's mapping.
///
/// Resource types that have no SWF column under `rules` (anything but the
/// processor and memory targets) cannot be represented and are dropped;
/// dropped_records() counts records that lost a request that way. Records
/// whose total processor demand is not a multiple of the equivalence
/// multiplier are rounded up to whole processors.
class SwfWriter : public WorkloadWriter {
 public:
  SwfWriter(std::ostream& out, IngestRules rules, std::string provenance, std::int64_t unix_start_time = 0);

  void write(const JobRecord& job) override;
  void finish() override;

  std::size_t lines_written() const noexcept { return lines_; }
  std::size_t dropped_records() const noexcept { return dropped_; }

  /// One SWF data line (no newline) for `job`.
  std::string format(const JobRecord& job);

 private:
  void write_header();

  std::ostream& out_;
  IngestRules rules_;
  std::string provenance_;
  std::int64_t unix_start_time_;
  bool header_done_ = false;
  std::size_t lines_ = 0;
  std::size_t dropped_ = 0;
  Seconds last_submit_ = 0;
};

/// Writes the header plus one line per job; returns the number of data lines.
std::size_t write_swf(std::span<const JobRecord> jobs, std::ostream& out, const IngestRules& rules,
                      const std::string& provenance, std::int64_t unix_start_time = 0);

}  // namespace wmsim
