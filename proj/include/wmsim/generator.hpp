#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wmsim/job.hpp"
#include "wmsim/system.hpp"
#include "wmsim/workload_io.hpp"

namespace wmsim {

inline constexpr Seconds kSlotLength = 1800;
inline constexpr std::size_t kSlots = 48;

/// Share of jobs submitted in each half hour of the (UTC) day.
struct SlotWeightModel {
  std::array<double, kSlots> weights{};

  static std::size_t slot_of(std::int64_t epoch_seconds);
  /// Uniform weights 1/48.
  static SlotWeightModel uniform();
};

struct GeneratorProfile {
  SlotWeightModel slots;
  std::vector<Seconds> interarrival;  // sorted
  Seconds v_max0 = kSlotLength;
  /// Weight units per second of v: mean slot weight / slot length.
  double v_weight_per_second = 1.0 / (kSlots * kSlotLength);
  std::array<double, 24> hourly{};
  std::array<double, 7> daily{};  // 0 = Sunday
  std::array<double, 12> monthly{};
  bool has_months = false;
  double serial_fraction = 0.0;
  std::vector<std::int64_t> parallel_nodes;  // sorted
  std::vector<double> flops;                 // GFLOP, sorted
  std::size_t flop_excluded = 0;
  std::int64_t epoch = 0;  // config start_time
  Seconds first_submit = 0;
  std::size_t jobs = 0;
};

struct GeneratorConfig {
  std::map<std::string, double> performance;  // GFLOPS per unit
  ResourceVector min_request;                 // per node
  ResourceVector max_request;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double estimate_factor_min = 1.0;
  double estimate_factor_max = 3.0;

  /// Keys: performance, request_limits {min, max}, count, seed,
  /// estimate_factor [lo, hi]. Throws ConfigError.
  static GeneratorConfig from_json(std::string_view text);
  static GeneratorConfig from_file(const std::filesystem::path& path);
  /// Resource types named in request_limits, sorted.
  std::vector<std::string> request_types() const;
};

/// dot(per_node, performance) in GFLOPS.
double node_performance(const ResourceVector& per_node, const std::map<std::string, double>& performance);
/// duration x node performance x nodes.
double job_gflop(const JobRecord& job, const std::map<std::string, double>& performance);

/// One pass over a submit-ordered trace. Throws std::invalid_argument on an
/// empty trace.
GeneratorProfile fit_profile(JobSource& trace, const SystemConfig& cfg,
                             const std::map<std::string, double>& performance);

/// v_max - (v_max - s) x (1 - pr), never below s.
double update_vmax(double v_max, double s, double pr);

/// Per-period submission counts of the jobs generated so far.
struct GenerationCounts {
  std::array<std::size_t, 24> hourly{};
  std::array<std::size_t, 7> daily{};
  std::array<std::size_t, 12> monthly{};
  std::int64_t last_epoch = -1;  // absolute time of the last submission; -1 before the first

  void add(std::int64_t epoch_seconds);
};

double progress_ratio(const GenerationCounts& generated, std::size_t target_count, const GeneratorProfile& profile);

/// Slot walk from `prev_submit`. `v` is in weight units.
Seconds advance_by_weight(Seconds prev_submit, double v, const GeneratorProfile& profile);

Seconds next_submit_time(Seconds prev_submit, double v_max, const GeneratorProfile& profile, std::mt19937_64& rng);

struct JobShape {
  bool serial = false;
  std::int64_t nodes = 1;
  ResourceVector per_node;
  Seconds duration = 1;
  double flop = 0;
};

JobShape generate_job_shape(const GeneratorProfile& profile, const GeneratorConfig& cfg, const IngestRules& rules,
                            std::mt19937_64& rng);

/// `cfg.count` synthetic jobs, ids 1..count, submit-ordered.
std::vector<JobRecord> generate(const GeneratorProfile& profile, const GeneratorConfig& cfg, const SystemConfig& sys);

/// Histograms of absolute submit times, normalized to 1.
std::array<double, 24> hourly_histogram(std::span<const JobRecord> jobs, std::int64_t epoch);
std::array<double, 7> weekday_histogram(std::span<const JobRecord> jobs, std::int64_t epoch);
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace wmsim
