#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "surrogate.hpp"
#include "wmsim/errors.hpp"
#include "wmsim/generator.hpp"

namespace wmsim {
namespace {

constexpr const char* kGenConfig = R"({
  "performance": {"core": 1.667},
  "request_limits": {"min": {"core": 1, "mem": 256}, "max": {"core": 4, "mem": 1024}},
  "count": 500,
  "seed": 9
})";

GeneratorProfile uniform_profile() {
  GeneratorProfile p;
  p.slots = SlotWeightModel::uniform();
  return p;
}

TEST(Vmax, Update) {
  EXPECT_DOUBLE_EQ(update_vmax(7200, 1800, 0.5), 4500);
  EXPECT_DOUBLE_EQ(update_vmax(7200, 1800, 1.0), 7200);
  EXPECT_DOUBLE_EQ(update_vmax(7200, 1800, 0.0), 1800);
  EXPECT_DOUBLE_EQ(update_vmax(1800, 1800, 0.3), 1800);
  EXPECT_DOUBLE_EQ(update_vmax(1000, 1800, 0.5), 1800);
}

TEST(Slots, SlotOf) {
  EXPECT_EQ(SlotWeightModel::slot_of(0), 0u);
  EXPECT_EQ(SlotWeightModel::slot_of(1799), 0u);
  EXPECT_EQ(SlotWeightModel::slot_of(1800), 1u);
  EXPECT_EQ(SlotWeightModel::slot_of(86400 + 3600), 2u);
  const auto u = SlotWeightModel::uniform();
  EXPECT_NEAR(std::accumulate(u.weights.begin(), u.weights.end(), 0.0), 1.0, 1e-12);
}

TEST(AdvanceByWeight, UniformWeights) {
  const auto p = uniform_profile();
  EXPECT_EQ(advance_by_weight(0, 2.0 / 48, p), 3600);
  EXPECT_EQ(advance_by_weight(0, 0.5 / 48, p), 900);
  EXPECT_EQ(advance_by_weight(100, 0.0, p), 101);
  // The per-second scale maps v seconds to about v seconds on uniform weights.
  EXPECT_NEAR(advance_by_weight(0, 5000 * p.v_weight_per_second, p), 5000, 1);
}

TEST(AdvanceByWeight, SkipsEmptySlots) {
  auto p = uniform_profile();
  p.slots.weights.fill(0);
  p.slots.weights[0] = 0.5;
  p.slots.weights[1] = 0.5;
  EXPECT_EQ(advance_by_weight(0, 0.75, p), 2700);
  // From slot 1, 0.625 exhausts slot 1 and the empty slots, wrapping to slot 0 of the next day.
  EXPECT_EQ(advance_by_weight(1800, 0.625, p), 86400 + 450);
  p.slots.weights.fill(0);
  EXPECT_THROW(advance_by_weight(0, 0.1, p), std::invalid_argument);
}

TEST(ProgressRatio, Cases) {
  GeneratorProfile p = uniform_profile();
  p.hourly.fill(1.0 / 24);
  p.daily.fill(1.0 / 7);
  GenerationCounts c;
  EXPECT_EQ(progress_ratio(c, 10, p), 0.0);
  EXPECT_THROW(progress_ratio(c, 0, p), std::invalid_argument);
  // On track: hour share 1/24 and weekday share 1/7 give pr = 1.
  GenerationCounts on;
  on.hourly[0] = 7;
  on.daily[4] = 24;
  on.last_epoch = 0;  // 1970-01-01 00:00, a Thursday
  EXPECT_NEAR(progress_ratio(on, 168, p), 1.0, 1e-12);
  GenerationCounts behind;
  behind.last_epoch = 0;
  EXPECT_EQ(progress_ratio(behind, 168, p), 0.0);
}

TEST(JobShape, DurationFromFlops) {
  const auto sys = testing::seth_config();
  const auto rules = IngestRules::from_config(sys);
  auto cfg = GeneratorConfig::from_json(
      R"({"performance": {"core": 1.667}, "request_limits": {"min": {"core": 8}, "max": {"core": 8}}})");
  GeneratorProfile p = uniform_profile();
  p.flops = {1000};
  p.parallel_nodes = {1};
  p.serial_fraction = 0;
  std::mt19937_64 rng(1);
  const auto s = generate_job_shape(p, cfg, rules, rng);
  EXPECT_FALSE(s.serial);
  EXPECT_EQ(s.per_node.get("core"), 8);
  EXPECT_DOUBLE_EQ(node_performance(s.per_node, cfg.performance), 8 * 1.667);
  EXPECT_EQ(s.duration, 75);
}

TEST(JobShape, SerialIsOneNodeOneProcessor) {
  const auto rules = IngestRules::from_config(testing::seth_config());
  auto cfg = GeneratorConfig::from_json(kGenConfig);
  GeneratorProfile p = uniform_profile();
  p.flops = {5000};
  p.parallel_nodes = {4};
  p.serial_fraction = 1;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto s = generate_job_shape(p, cfg, rules, rng);
    EXPECT_TRUE(s.serial);
    EXPECT_EQ(s.nodes, 1);
    EXPECT_EQ(s.per_node.get("core"), 2);
  }
  p.serial_fraction = 0;
  for (int i = 0; i < 20; ++i) {
    const auto s = generate_job_shape(p, cfg, rules, rng);
    EXPECT_EQ(s.nodes, 4);
    EXPECT_EQ(s.per_node.get("core") % 2, 0);
  }
}

TEST(GeneratorConfig, Parsing) {
  const auto cfg = GeneratorConfig::from_json(kGenConfig);
  EXPECT_EQ(cfg.count, 500u);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.request_types(), (std::vector<std::string>{"core", "mem"}));
  EXPECT_DOUBLE_EQ(cfg.estimate_factor_min, 1.0);
  EXPECT_DOUBLE_EQ(cfg.estimate_factor_max, 3.0);
  EXPECT_THROW(GeneratorConfig::from_json(R"({"performance": {"core": 1},
      "request_limits": {"min": {"core": 5}, "max": {"core": 4}}})"),
               ConfigError);
  EXPECT_THROW(GeneratorConfig::from_json(R"({"performance": {"gpu": 1},
      "request_limits": {"min": {"core": 1}, "max": {"core": 4}}})"),
               ConfigError);
  EXPECT_THROW(GeneratorConfig::from_json(R"({"performance": {"core": 1},
      "request_limits": {"min": {"core": 1}, "max": {"core": 4}}, "estimate_factor": [0.5, 2]})"),
               ConfigError);
  EXPECT_THROW(GeneratorConfig::from_json(R"({"performance": {"core": 1},
      "request_limits": {"min": {"core": 1}, "max": {"core": 4}}, "count": -3})"),
               ConfigError);
  EXPECT_THROW(GeneratorConfig::from_json("[]"), ConfigError);
}

struct Fitted {
  SystemConfig sys = testing::seth_config();
  GeneratorConfig cfg = GeneratorConfig::from_json(kGenConfig);
  GeneratorProfile profile;

  Fitted() {
    testing::SurrogateOptions o;
    o.jobs = 3000;
    std::istringstream in(testing::surrogate_swf(o));
    SwfReader reader(in, IngestRules::from_config(sys));
    profile = fit_profile(reader, sys, cfg.performance);
  }
};

TEST(FitProfile, Basics) {
  Fitted f;
  EXPECT_EQ(f.profile.jobs, 3000u);
  EXPECT_EQ(f.profile.epoch, f.sys.start_time);
  EXPECT_GT(f.profile.serial_fraction, 0.2);
  EXPECT_LT(f.profile.serial_fraction, 0.45);
  EXPECT_NEAR(std::accumulate(f.profile.hourly.begin(), f.profile.hourly.end(), 0.0), 1.0, 1e-9);
  EXPECT_NEAR(std::accumulate(f.profile.daily.begin(), f.profile.daily.end(), 0.0), 1.0, 1e-9);
  EXPECT_TRUE(std::is_sorted(f.profile.interarrival.begin(), f.profile.interarrival.end()));
  EXPECT_TRUE(std::is_sorted(f.profile.flops.begin(), f.profile.flops.end()));
  EXPECT_GE(f.profile.v_max0, kSlotLength);

  VectorSource empty({});
  EXPECT_THROW(fit_profile(empty, f.sys, f.cfg.performance), std::invalid_argument);
}

TEST(Generate, DeterministicAndValid) {
  Fitted f;
  const auto a = generate(f.profile, f.cfg, f.sys);
  const auto b = generate(f.profile, f.cfg, f.sys);
  EXPECT_EQ(a, b);
  auto other = f.cfg;
  other.seed = 10;
  EXPECT_NE(generate(f.profile, other, f.sys), a);

  ASSERT_EQ(a.size(), 500u);
  EXPECT_EQ(a.front().submit_time, f.profile.first_submit);
  NodePool pool(f.sys);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& j = a[i];
    EXPECT_EQ(j.job_id, static_cast<JobId>(i + 1));
    EXPECT_EQ(check_job_record(j), "");
    if (i > 0) EXPECT_GT(j.submit_time, a[i - 1].submit_time);
    EXPECT_GE(j.wall_time_estimate, j.duration);
    EXPECT_LE(j.wall_time_estimate, 3 * j.duration + 1);
    EXPECT_TRUE(pool.satisfiable(j.requested_nodes, *pool.types().densify(j.per_node_request)));
  }
}

TEST(Generate, RoundTripsThroughSwf) {
  Fitted f;
  const auto jobs = generate(f.profile, f.cfg, f.sys);
  const auto rules = IngestRules::from_config(f.sys);
  std::ostringstream out;
  write_swf(jobs, out, rules, "generated", f.sys.start_time);
  std::istringstream in(out.str());
  SwfReader reader(in, rules);
  std::size_t i = 0;
  while (auto j = reader.next()) {
    ASSERT_LT(i, jobs.size());
    EXPECT_EQ(j->submit_time, jobs[i].submit_time);
    EXPECT_EQ(j->duration, jobs[i].duration);
    // Ingest re-packs the processor count onto as few nodes as possible.
    const auto total = jobs[i].requested_nodes * jobs[i].per_node_request.get("core");
    const auto split = map_processors_to_nodes(total, rules.cores_per_node);
    EXPECT_EQ(j->requested_nodes, split.nodes);
    EXPECT_EQ(j->per_node_request.get("core"), split.per_node);
    ++i;
  }
  EXPECT_EQ(i, jobs.size());
}

TEST(Histograms, Normalized) {
  std::vector<JobRecord> jobs;
  for (JobId id = 1; id <= 48; ++id) jobs.push_back(testing::job(id, id * 1800, 1, 1, {{"core", 1}}));
  const auto h = hourly_histogram(jobs, 0);
  const auto d = weekday_histogram(jobs, 0);
  EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
  for (double x : h) EXPECT_NEAR(x, 1.0 / 24, 1e-12);
  const std::vector<double> p{0.5, 0.5}, q{1.0, 0.0};
  EXPECT_DOUBLE_EQ(total_variation(p, q), 0.5);
  EXPECT_DOUBLE_EQ(total_variation(p, p), 0.0);
}

}  // namespace
}  // namespace wmsim
