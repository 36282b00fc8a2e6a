#include "wmsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wmsim/dispatch.hpp"
#include "wmsim/errors.hpp"

namespace wmsim {

double slowdown(Seconds wait, Seconds duration) {
  return static_cast<double>(wait + duration) / static_cast<double>(duration);
}

std::size_t queue_size_sample(const SystemView& view) { return view.queue.size(); }

namespace {

constexpr const char* kResultsHeader = "# job_id\tsubmit\tstart\tend\twait\tduration\tslowdown\tnodes\trequest";
constexpr const char* kBenchHeader = "# time\tqueued\trunning\tdispatch_us\tstep_us\tloaded";

void check_stream(std::ostream& out) {
  if (!out) throw IoError("write error on output stream");
}

}  // namespace

std::string format_footer(const RunFooter& f) {
  std::string s = "# end seed=" + std::to_string(f.seed) + " dispatcher=" + f.dispatcher + " config=" + f.config_hash +
                  " wall_ms=" + std::to_string(f.wall_ms);
  if (f.partial) s += " partial";
  return s;
}

TsvResultsWriter::TsvResultsWriter(std::ostream& out) : out_(out) {
  out_ << kResultsHeader << '\n';
  check_stream(out_);
}

void TsvResultsWriter::on_job_completed(const JobResult& r) {
  char sd[64];
  std::snprintf(sd, sizeof sd, "%.6f", r.slowdown);
  out_ << r.job_id << '\t' << r.submit << '\t' << r.start << '\t' << r.end << '\t' << r.wait << '\t' << r.duration
       << '\t' << sd << '\t' << r.nodes << '\t' << r.request.to_string() << '\n';
  check_stream(out_);
}

void TsvResultsWriter::on_finish(const RunFooter& f) {
  out_ << format_footer(f) << '\n';
  out_.flush();
}

TsvBenchWriter::TsvBenchWriter(std::ostream& out) : out_(out) {
  out_ << kBenchHeader << '\n';
  check_stream(out_);
}

void TsvBenchWriter::on_step(const StepBenchmark& b) {
  out_ << b.time << '\t' << b.queued << '\t' << b.running << '\t' << b.dispatch_us << '\t' << b.step_us << '\t'
       << b.loaded << '\n';
  check_stream(out_);
}

void TsvBenchWriter::on_finish(const RunFooter& f) {
  out_ << format_footer(f) << '\n';
  out_.flush();
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  if (p <= 0.0) return sorted.front();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

BoxStats describe(std::vector<double> values) {
  BoxStats b;
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  b.count = values.size();
  b.min = values.front();
  b.max = values.back();
  b.q1 = nearest_rank(values, 0.25);
  b.median = nearest_rank(values, 0.5);
  b.q3 = nearest_rank(values, 0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  b.mean = sum / static_cast<double>(values.size());
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::lower_bound(values.begin(), values.end(), lo);
  b.whisker_high = *(std::upper_bound(values.begin(), values.end(), hi) - 1);
  return b;
}

namespace {

SummaryReport assemble(std::vector<double> slowdowns, std::vector<double> queue_samples,
                       const std::map<std::int64_t, std::pair<std::size_t, std::int64_t>>& bins, std::size_t steps,
                       std::int64_t dispatch_us, std::int64_t step_us, std::int64_t peak_loaded, std::int64_t loaded_sum,
                       std::int64_t wall_ms) {
  SummaryReport r;
  r.jobs = slowdowns.size();
  r.steps = steps;
  r.dispatches = queue_samples.size();
  r.slowdown = describe(std::move(slowdowns));
  r.queue_size = describe(std::move(queue_samples));
  r.total_dispatch_us = dispatch_us;
  if (steps > 0) {
    r.mean_dispatch_us = static_cast<double>(dispatch_us) / static_cast<double>(steps);
    r.mean_step_us = static_cast<double>(step_us) / static_cast<double>(steps);
    r.mean_loaded = static_cast<double>(loaded_sum) / static_cast<double>(steps);
  }
  for (const auto& [lower, agg] : bins) {
    r.dispatch_by_queue.push_back(
        {lower, agg.first, static_cast<double>(agg.second) / static_cast<double>(agg.first)});
  }
  r.total_wall_ms = wall_ms;
  r.peak_loaded = peak_loaded;
  return r;
}

}  // namespace

SummaryReport summarize(std::span<const JobResult> results, std::span<const StepBenchmark> bench,
                        std::int64_t wall_ms) {
  SummaryCollector c;
  for (const auto& r : results) c.on_job_completed(r);
  for (const auto& b : bench) c.on_step(b);
  c.on_finish(RunFooter{0, {}, {}, wall_ms});
  return c.report();
}

void SummaryCollector::on_job_completed(const JobResult& r) { slowdowns_.push_back(slowdown(r.wait, r.duration)); }

void SummaryCollector::on_step(const StepBenchmark& b) {
  ++steps_;
  dispatch_us_ += b.dispatch_us;
  step_us_ += b.step_us;
  peak_loaded_ = std::max(peak_loaded_, b.loaded);
  loaded_sum_ += b.loaded;
  if (b.queued > 0) {
    queue_samples_.push_back(static_cast<double>(b.queued));
    auto& bin = bins_[(b.queued / kQueueBinWidth) * kQueueBinWidth];
    ++bin.first;
    bin.second += b.dispatch_us;
  }
}

SummaryReport SummaryCollector::report() const {
  return assemble(slowdowns_, queue_samples_, bins_, steps_, dispatch_us_, step_us_, peak_loaded_, loaded_sum_, wall_ms_);
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::int64_t to_int(std::string_view s, std::size_t line_no) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError(line_no, "not an integer: '" + std::string(s) + "'");
  return v;
}

bool parse_footer(std::string_view line, RunFooter& f) {
  constexpr std::string_view prefix = "# end ";
  if (line.substr(0, prefix.size()) != prefix) return false;
  std::istringstream ss{std::string(line.substr(prefix.size()))};
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (tok == "partial") {
      f.partial = true;
      continue;
    }
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "seed") f.seed = std::stoull(val);
    if (key == "dispatcher") f.dispatcher = val;
    if (key == "config") f.config_hash = val;
    if (key == "wall_ms") f.wall_ms = std::stoll(val);
  }
  return true;
}

template <typename Row, typename F>
std::vector<Row> read_rows(std::istream& in, RunFooter* footer, std::size_t columns, F&& convert) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      RunFooter f;
      if (parse_footer(line, f) && footer) *footer = f;
      continue;
    }
    auto cols = split_tabs(line);
    if (cols.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) + " columns, found " + std::to_string(cols.size()));
    }
    rows.push_back(convert(cols, line_no));
  }
  return rows;
}

}  // namespace

std::vector<JobResult> read_results_tsv(std::istream& in, RunFooter* footer) {
  return read_rows<JobResult>(in, footer, 9, [](const std::vector<std::string_view>& c, std::size_t ln) {
    JobResult r;
    r.job_id = to_int(c[0], ln);
    r.submit = to_int(c[1], ln);
    r.start = to_int(c[2], ln);
    r.end = to_int(c[3], ln);
    r.wait = to_int(c[4], ln);
    r.duration = to_int(c[5], ln);
    if (r.duration < 1) throw ParseError(ln, "duration must be >= 1");
    r.slowdown = slowdown(r.wait, r.duration);
    r.nodes = std::string(c[7]);
    try {
      r.request = ResourceVector::parse(c[8]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(ln, e.what());
    }
    return r;
  });
}

std::vector<StepBenchmark> read_bench_tsv(std::istream& in, RunFooter* footer) {
  return read_rows<StepBenchmark>(in, footer, 6, [](const std::vector<std::string_view>& c, std::size_t ln) {
    return StepBenchmark{to_int(c[0], ln), to_int(c[1], ln), to_int(c[2], ln),
                         to_int(c[3], ln), to_int(c[4], ln), to_int(c[5], ln)};
  });
}

void write_summary_json(const SummaryReport& r, const RunFooter& footer, std::ostream& out) {
  using nlohmann::ordered_json;
  auto box = [](const BoxStats& b) {
    return ordered_json{{"count", b.count},   {"min", b.min},   {"q1", b.q1},
                        {"median", b.median}, {"q3", b.q3},     {"max", b.max},
                        {"mean", b.mean},     {"whisker_low", b.whisker_low}, {"whisker_high", b.whisker_high}};
  };
  ordered_json j;
  j["dispatcher"] = footer.dispatcher;
  j["seed"] = footer.seed;
  j["config"] = footer.config_hash;
  j["jobs"] = r.jobs;
  j["steps"] = r.steps;
  j["dispatches"] = r.dispatches;
  j["slowdown"] = box(r.slowdown);
  j["queue_size"] = box(r.queue_size);
  j["mean_dispatch_us"] = r.mean_dispatch_us;
  j["mean_step_us"] = r.mean_step_us;
  j["total_dispatch_us"] = r.total_dispatch_us;
  j["dispatch_by_queue"] = ordered_json::array();
  for (const auto& b : r.dispatch_by_queue) {
    j["dispatch_by_queue"].push_back({{"lower", b.lower}, {"samples", b.samples}, {"mean_dispatch_us", b.mean_dispatch_us}});
  }
  j["total_wall_ms"] = r.total_wall_ms;
  j["peak_loaded"] = r.peak_loaded;
  j["mean_loaded"] = r.mean_loaded;
  out << j.dump(2) << '\n';
}

}  // namespace wmsim
