#include "wmsim/generator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "wmsim/errors.hpp"

namespace wmsim {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

struct Civil {
  int hour = 0;
  int weekday = 0;  // 0 = Sunday
  int month = 0;    // 0-based
  std::int64_t year_month = 0;
};

Civil civil(std::int64_t epoch) {
  const std::int64_t days = floor_div(epoch, kDay);
  const std::int64_t sec = epoch - days * kDay;
  Civil c;
  c.hour = static_cast<int>(sec / 3600);
  c.weekday = static_cast<int>(((days % 7) + 7 + 4) % 7);  // 1970-01-01 was a Thursday
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  c.month = static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
  c.year_month = static_cast<std::int64_t>(static_cast<int>(ymd.year())) * 12 + c.month;
  return c;
}

template <std::size_t N, typename T>
std::array<double, N> normalized(const std::array<T, N>& counts) {
  std::array<double, N> out{};
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0) return out;
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& sorted, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, sorted.size() - 1);
  return sorted[d(rng)];
}

ResourceVector parse_limits(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object of integers");
  ResourceVector v;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number_integer()) throw ConfigError(path + "." + it.key(), "expected an integer");
    const auto q = it.value().get<std::int64_t>();
    if (q < 0) throw ConfigError(path + "." + it.key(), "must be non-negative");
    v.set(it.key(), q);
  }
  return v;
}

}  // namespace

std::size_t SlotWeightModel::slot_of(std::int64_t epoch_seconds) {
  const std::int64_t sec = epoch_seconds - floor_div(epoch_seconds, kDay) * kDay;
  return static_cast<std::size_t>(sec / kSlotLength);
}

SlotWeightModel SlotWeightModel::uniform() {
  SlotWeightModel m;
  m.weights.fill(1.0 / kSlots);
  return m;
}

GeneratorConfig GeneratorConfig::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "expected a JSON object");
  GeneratorConfig cfg;
  if (!j.contains("performance") || !j["performance"].is_object()) {
    throw ConfigError("performance", "missing or not an object");
  }
  for (auto it = j["performance"].begin(); it != j["performance"].end(); ++it) {
    if (!it.value().is_number()) throw ConfigError("performance." + it.key(), "expected a number");
    const double p = it.value().get<double>();
    if (!(p >= 0)) throw ConfigError("performance." + it.key(), "must be non-negative");
    cfg.performance[it.key()] = p;
  }
  if (!j.contains("request_limits") || !j["request_limits"].is_object()) {
    throw ConfigError("request_limits", "missing or not an object");
  }
  const auto& lim = j["request_limits"];
  if (!lim.contains("min") || !lim.contains("max")) throw ConfigError("request_limits", "needs 'min' and 'max'");
  cfg.min_request = parse_limits(lim["min"], "request_limits.min");
  cfg.max_request = parse_limits(lim["max"], "request_limits.max");
  for (const auto& t : cfg.request_types()) {
    if (cfg.min_request.get(t) > cfg.max_request.get(t)) {
      throw ConfigError("request_limits.min." + t, "exceeds the maximum");
    }
  }
  bool computes = false;
  for (const auto& t : cfg.request_types()) {
    auto it = cfg.performance.find(t);
    if (it != cfg.performance.end() && it->second > 0 && cfg.max_request.get(t) > 0) computes = true;
  }
  if (!computes) throw ConfigError("performance", "no requestable resource type has positive performance");
  if (j.contains("count")) {
    if (!j["count"].is_number_integer() || j["count"].get<std::int64_t>() < 0) {
      throw ConfigError("count", "expected a non-negative integer");
    }
    cfg.count = j["count"].get<std::size_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("estimate_factor")) {
    const auto& f = j["estimate_factor"];
    if (!f.is_array() || f.size() != 2 || !f[0].is_number() || !f[1].is_number()) {
      throw ConfigError("estimate_factor", "expected [low, high]");
    }
    cfg.estimate_factor_min = f[0].get<double>();
    cfg.estimate_factor_max = f[1].get<double>();
    if (!(cfg.estimate_factor_min >= 1.0) || cfg.estimate_factor_max < cfg.estimate_factor_min) {
      throw ConfigError("estimate_factor", "need 1 <= low <= high");
    }
  }
  return cfg;
}

GeneratorConfig GeneratorConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open generator configuration '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<std::string> GeneratorConfig::request_types() const {
  std::set<std::string> names;
  for (const auto& [t, q] : min_request.entries()) names.insert(t);
  for (const auto& [t, q] : max_request.entries()) names.insert(t);
  return {names.begin(), names.end()};
}

double node_performance(const ResourceVector& per_node, const std::map<std::string, double>& performance) {
  double dot = 0;
  for (const auto& [t, q] : per_node.entries()) {
    if (auto it = performance.find(t); it != performance.end()) dot += static_cast<double>(q) * it->second;
  }
  return dot;
}

double job_gflop(const JobRecord& job, const std::map<std::string, double>& performance) {
  return static_cast<double>(job.duration) * node_performance(job.per_node_request, performance) *
         static_cast<double>(job.requested_nodes);
}

GeneratorProfile fit_profile(JobSource& trace, const SystemConfig& cfg,
                             const std::map<std::string, double>& performance) {
  const auto rules = IngestRules::from_config(cfg);
  GeneratorProfile p;
  p.epoch = cfg.start_time;
  std::array<std::size_t, kSlots> slots{};
  std::array<std::size_t, 24> hourly{};
  std::array<std::size_t, 7> daily{};
  std::array<std::size_t, 12> monthly{};
  std::set<std::int64_t> months;
  std::size_t serial = 0;
  Seconds prev = 0;
  Seconds max_gap = 0;

  while (auto job = trace.next()) {
    if (p.jobs == 0) {
      p.first_submit = job->submit_time;
    } else {
      const Seconds gap = job->submit_time - prev;
      if (gap < 0) throw OrderError(p.jobs + 1, "trace is not submit-ordered");
      p.interarrival.push_back(gap);
      max_gap = std::max(max_gap, gap);
    }
    prev = job->submit_time;
    ++p.jobs;

    const std::int64_t t = cfg.start_time + job->submit_time;
    const Civil c = civil(t);
    ++slots[SlotWeightModel::slot_of(t)];
    ++hourly[c.hour];
    ++daily[c.weekday];
    ++monthly[c.month];
    months.insert(c.year_month);

    if (job->requested_nodes == 1 && job->per_node_request.get(rules.processor.resource) <= rules.processor.multiplier) {
      ++serial;
    } else {
      p.parallel_nodes.push_back(job->requested_nodes);
    }
    const double flop = job_gflop(*job, performance);
    if (flop > 0) {
      p.flops.push_back(flop);
    } else {
      ++p.flop_excluded;
    }
  }
  if (p.jobs == 0) throw std::invalid_argument("cannot fit a profile to an empty trace");

  p.slots.weights = normalized(slots);
  p.hourly = normalized(hourly);
  p.daily = normalized(daily);
  p.monthly = normalized(monthly);
  p.has_months = months.size() >= 2;
  p.serial_fraction = static_cast<double>(serial) / static_cast<double>(p.jobs);
  p.v_max0 = std::max(max_gap, kSlotLength);
  std::sort(p.interarrival.begin(), p.interarrival.end());
  std::sort(p.parallel_nodes.begin(), p.parallel_nodes.end());
  std::sort(p.flops.begin(), p.flops.end());
  return p;
}

double update_vmax(double v_max, double s, double pr) { return std::max(s, v_max - (v_max - s) * (1.0 - pr)); }

void GenerationCounts::add(std::int64_t epoch_seconds) {
  const Civil c = civil(epoch_seconds);
  ++hourly[c.hour];
  ++daily[c.weekday];
  ++monthly[c.month];
  last_epoch = epoch_seconds;
}

double progress_ratio(const GenerationCounts& generated, std::size_t target_count, const GeneratorProfile& profile) {
  if (target_count == 0) throw std::invalid_argument("progress_ratio: target count must be positive");
  if (generated.last_epoch < 0) return 0.0;
  const Civil c = civil(generated.last_epoch);
  const double n = static_cast<double>(target_count);
  auto factor = [n](std::size_t count, double real) { return real > 0 ? (static_cast<double>(count) / n) / real : 1.0; };
  double pr = factor(generated.hourly[c.hour], profile.hourly[c.hour]) *
              factor(generated.daily[c.weekday], profile.daily[c.weekday]);
  if (profile.has_months) pr *= factor(generated.monthly[c.month], profile.monthly[c.month]);
  return pr;
}

Seconds advance_by_weight(Seconds prev_submit, double v, const GeneratorProfile& profile) {
  const auto& w = profile.slots.weights;
  double total = 0;
  for (double x : w) total += x;
  if (!(total > 0)) throw std::invalid_argument("slot weights are all zero");
  std::size_t k = SlotWeightModel::slot_of(profile.epoch + prev_submit);
  std::int64_t surpassed = 0;
  if (v >= total) {
    const double cycles = std::floor(v / total);
    v -= cycles * total;
    surpassed += static_cast<std::int64_t>(cycles) * static_cast<std::int64_t>(kSlots);
  }
  for (std::size_t guard = 0; guard < 2 * kSlots && v >= w[k]; ++guard) {
    v -= w[k];
    ++surpassed;
    k = (k + 1) % kSlots;
  }
  Seconds offset = 0;
  if (w[k] > 0 && v > 0) {
    offset = std::clamp<Seconds>(static_cast<Seconds>(std::floor(v / w[k] * kSlotLength)), 0, kSlotLength - 1);
  }
  return std::max(prev_submit + surpassed * kSlotLength + offset, prev_submit + 1);
}

Seconds next_submit_time(Seconds prev_submit, double v_max, const GeneratorProfile& profile, std::mt19937_64& rng) {
  const auto& s = profile.interarrival;
  const auto n = static_cast<std::size_t>(
      std::upper_bound(s.begin(), s.end(), static_cast<Seconds>(std::floor(v_max))) - s.begin());
  double v_sec = v_max;
  if (n > 0) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    v_sec = static_cast<double>(s[d(rng)]);
  }
  return advance_by_weight(prev_submit, v_sec * profile.v_weight_per_second, profile);
}

JobShape generate_job_shape(const GeneratorProfile& profile, const GeneratorConfig& cfg, const IngestRules& rules,
                            std::mt19937_64& rng) {
  if (profile.flops.empty()) throw std::invalid_argument("profile has no FLOP samples");
  const auto& core = rules.processor.resource;
  const Quantity unit = rules.processor.multiplier;
  JobShape s;
  s.serial = std::bernoulli_distribution(profile.serial_fraction)(rng);
  if (!s.serial && !profile.parallel_nodes.empty()) s.nodes = pick(profile.parallel_nodes, rng);

  const auto types = cfg.request_types();
  double dot = 0;
  for (int attempt = 0; attempt < 100 && !(dot > 0); ++attempt) {
    s.per_node = ResourceVector{};
    for (const auto& t : types) {
      Quantity lo = cfg.min_request.get(t);
      const Quantity hi = cfg.max_request.get(t);
      if (t != core) {
        s.per_node.set(t, std::uniform_int_distribution<Quantity>(lo, hi)(rng));
        continue;
      }
      if (s.serial) {
        s.per_node.set(t, std::min(unit, std::max<Quantity>(hi, 1)));
        continue;
      }
      lo = std::max<Quantity>(lo, 1);
      // A one-node parallel job needs more than one processor.
      if (s.nodes == 1 && unit + 1 <= hi) lo = std::max(lo, unit + 1);
      Quantity q = std::uniform_int_distribution<Quantity>(lo, std::max(lo, hi))(rng);
      // Whole processors, so the SWF file reproduces the request.
      Quantity whole = (q + unit - 1) / unit * unit;
      if (whole > hi) whole -= unit;
      if (whole >= lo) q = whole;
      s.per_node.set(t, q);
    }
    dot = node_performance(s.per_node, cfg.performance);
  }
  if (!(dot > 0)) throw std::runtime_error("could not draw a request with positive performance");
  s.flop = pick(profile.flops, rng);
  s.duration = std::max<Seconds>(1, static_cast<Seconds>(std::ceil(s.flop / (dot * static_cast<double>(s.nodes)))));
  return s;
}

std::vector<JobRecord> generate(const GeneratorProfile& profile, const GeneratorConfig& cfg, const SystemConfig& sys) {
  const auto rules = IngestRules::from_config(sys);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> factor(cfg.estimate_factor_min, cfg.estimate_factor_max);
  GenerationCounts counts;
  std::vector<JobRecord> jobs;
  jobs.reserve(cfg.count);
  Seconds prev = profile.first_submit;
  const auto s = static_cast<double>(kSlotLength);
  const auto v0 = static_cast<double>(profile.v_max0);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    Seconds submit = profile.first_submit;
    if (i > 0) {
      const double pr = progress_ratio(counts, cfg.count, profile);
      submit = next_submit_time(prev, std::min(update_vmax(v0, s, pr), v0), profile, rng);
    }
    counts.add(profile.epoch + submit);
    const JobShape shape = generate_job_shape(profile, cfg, rules, rng);
    JobRecord job;
    job.job_id = static_cast<JobId>(i + 1);
    job.submit_time = submit;
    job.duration = shape.duration;
    job.wall_time_estimate =
        std::max(shape.duration, static_cast<Seconds>(std::ceil(static_cast<double>(shape.duration) * factor(rng))));
    job.requested_nodes = shape.nodes;
    job.per_node_request = shape.per_node;
    jobs.push_back(std::move(job));
    prev = submit;
  }
  return jobs;
}

std::array<double, 24> hourly_histogram(std::span<const JobRecord> jobs, std::int64_t epoch) {
  std::array<std::size_t, 24> c{};
  for (const auto& j : jobs) ++c[civil(epoch + j.submit_time).hour];
  return normalized(c);
}

std::array<double, 7> weekday_histogram(std::span<const JobRecord> jobs, std::int64_t epoch) {
  std::array<std::size_t, 7> c{};
  for (const auto& j : jobs) ++c[civil(epoch + j.submit_time).weekday];
  return normalized(c);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return d / 2;
}

}  // namespace wmsim
