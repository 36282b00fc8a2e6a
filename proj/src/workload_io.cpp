#include "wmsim/workload_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "wmsim/errors.hpp"

namespace wmsim {

IngestRules IngestRules::from_config(const SystemConfig& cfg) {
  IngestRules rules;
  if (auto it = cfg.equivalence.find("processor"); it != cfg.equivalence.end()) rules.processor = it->second;
  if (auto it = cfg.equivalence.find("memory"); it != cfg.equivalence.end()) {
    rules.memory = it->second;
  } else if (cfg.max_per_node("mem") > 0) {
    rules.memory = Equivalence{"mem", 1};
  }
  rules.cores_per_node = std::max<Quantity>(1, cfg.max_per_node(rules.processor.resource));
  return rules;
}

NodeSplit map_processors_to_nodes(Quantity total_units, Quantity cores_per_node) {
  if (total_units < 1 || cores_per_node < 1) throw std::invalid_argument("map_processors_to_nodes: arguments must be >= 1");
  const auto nodes = (total_units + cores_per_node - 1) / cores_per_node;
  const auto per_node = (total_units + nodes - 1) / nodes;
  return {nodes, per_node};
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

bool lenient_column(std::size_t col) { return col == kAverageCpuTime || col == kUsedMemory; }

std::int64_t parse_field(std::string_view tok, std::size_t col, std::size_t line_no) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc{} && p == tok.data() + tok.size()) return v;
  if (lenient_column(col)) {
    double d = 0;
    auto [pd, ecd] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    if (ecd == std::errc{} && pd == tok.data() + tok.size()) return static_cast<std::int64_t>(d);
  }
  throw ParseError(line_no, "field " + std::to_string(col + 1) + " is not an integer: '" + std::string(tok) + "'");
}

}  // namespace

SwfLine parse_swf_line(std::string_view text, std::size_t line_no) {
  SwfLine out{};
  std::size_t col = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (col >= kSwfColumns) throw ParseError(line_no, "more than 18 fields");
    out[col] = parse_field(text.substr(i, j - i), col, line_no);
    ++col;
    i = j;
  }
  if (col != kSwfColumns) throw ParseError(line_no, "expected 18 fields, found " + std::to_string(col));
  return out;
}

SwfReader::SwfReader(std::istream& in, IngestRules rules) : in_(in), rules_(std::move(rules)) {}

std::optional<JobRecord> SwfReader::to_record(const SwfLine& f) {
  if (f[kJobNumber] <= 0) {
    ++stats_.skipped_job_id;
    return std::nullopt;
  }
  if (f[kSubmitTime] < 0) {
    ++stats_.skipped_submit;
    return std::nullopt;
  }
  if (f[kRunTime] < 0) {
    ++stats_.skipped_runtime;
    return std::nullopt;
  }
  const auto processors = f[kRequestedProcessors] > 0 ? f[kRequestedProcessors] : f[kAllocatedProcessors];
  if (processors <= 0) {
    ++stats_.skipped_processors;
    return std::nullopt;
  }

  JobRecord job;
  job.job_id = f[kJobNumber];
  job.submit_time = f[kSubmitTime];
  job.duration = std::max<Seconds>(1, f[kRunTime]);
  job.wall_time_estimate = f[kRequestedTime] >= 1 ? f[kRequestedTime] : job.duration;
  const auto split = map_processors_to_nodes(processors * rules_.processor.multiplier, rules_.cores_per_node);
  job.requested_nodes = split.nodes;
  job.per_node_request.set(rules_.processor.resource, split.per_node);
  if (rules_.memory && f[kRequestedMemory] > 0) {
    job.per_node_request.set(rules_.memory->resource,
                             f[kRequestedMemory] * rules_.memory->multiplier * split.per_node);
  }
  job.user_id = f[kUserId];
  job.group_id = f[kGroupId];
  job.queue_id = f[kQueue];
  return job;
}

std::optional<JobRecord> SwfReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++stats_.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = 0;
    while (first < line.size() && is_space(line[first])) ++first;
    if (first == line.size()) continue;
    if (line[first] == ';') {
      ++stats_.comment_lines;
      continue;
    }
    ++stats_.data_lines;
    const auto fields = parse_swf_line(line, stats_.lines);
    auto job = to_record(fields);
    if (!job) continue;
    if (stats_.accepted > 0 && job->submit_time < last_submit_) {
      throw OrderError(stats_.lines, "submit time " + std::to_string(job->submit_time) + " precedes " +
                                         std::to_string(last_submit_));
    }
    if (!seen_ids_.insert(job->job_id).second) {
      throw ParseError(stats_.lines, "duplicate job number " + std::to_string(job->job_id));
    }
    last_submit_ = job->submit_time;
    ++stats_.accepted;
    return job;
  }
  if (in_.bad()) throw IoError("read error on workload stream");
  return std::nullopt;
}

std::vector<JobRecord> read_swf_file(const std::filesystem::path& path, const IngestRules& rules, SwfStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open workload '" + path.string() + "'");
  SwfReader reader(in, rules);
  std::vector<JobRecord> out;
  while (auto job = reader.next()) out.push_back(std::move(*job));
  if (stats) *stats = reader.stats();
  return out;
}

SwfWriter::SwfWriter(std::ostream& out, IngestRules rules, std::string provenance, std::int64_t unix_start_time)
    : out_(out), rules_(std::move(rules)), provenance_(std::move(provenance)), unix_start_time_(unix_start_time) {}

void SwfWriter::write_header() {
  out_ << "; Version: 2.2\n";
  out_ << "; Generator: " << provenance_ << "\n";
  out_ << "; UnixStartTime: " << unix_start_time_ << "\n";
  out_ << "; Note: processors are " << rules_.processor.resource << " / " << rules_.processor.multiplier;
  if (rules_.memory) out_ << "; memory is KB per processor (" << rules_.memory->resource << ")";
  out_ << "\n";
  out_ << "; Note: all status codes kept; status written as 1\n";
  header_done_ = true;
}

std::string SwfWriter::format(const JobRecord& job) {
  const auto cores = job.per_node_request.get(rules_.processor.resource);
  const auto total = cores * job.requested_nodes;
  const auto mult = rules_.processor.multiplier;
  const auto processors = (total + mult - 1) / mult;

  std::int64_t memory = -1;
  bool dropped = false;
  for (const auto& [type, q] : job.per_node_request.entries()) {
    if (type == rules_.processor.resource) continue;
    if (rules_.memory && type == rules_.memory->resource) {
      const auto denom = rules_.memory->multiplier * std::max<Quantity>(1, cores);
      memory = (q + denom - 1) / denom;
      continue;
    }
    dropped = true;
  }
  if (dropped) ++dropped_;

  const SwfLine f{job.job_id, job.submit_time,        -1, job.duration, processors, -1,
                  -1,         processors,             job.wall_time_estimate,   memory,     1,
                  job.user_id, job.group_id,          -1, job.queue_id, -1,         -1,
                  -1};
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) line += ' ';
    line += std::to_string(f[i]);
  }
  return line;
}

void SwfWriter::write(const JobRecord& job) {
  if (!header_done_) write_header();
  if (lines_ > 0 && job.submit_time < last_submit_) {
    throw std::invalid_argument("SwfWriter: records must be in nondecreasing submit order");
  }
  last_submit_ = job.submit_time;
  out_ << format(job) << '\n';
  if (!out_) throw IoError("write error on workload stream");
  ++lines_;
}

void SwfWriter::finish() {
  if (!header_done_) write_header();
  out_.flush();
  if (!out_) throw IoError("write error on workload stream");
}

std::size_t write_swf(std::span<const JobRecord> jobs, std::ostream& out, const IngestRules& rules,
                      const std::string& provenance, std::int64_t unix_start_time) {
  SwfWriter writer(out, rules, provenance, unix_start_time);
  for (const auto& j : jobs) writer.write(j);
  writer.finish();
  return writer.lines_written();
}

}  // namespace wmsim
