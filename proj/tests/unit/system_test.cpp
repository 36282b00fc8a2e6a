#include <gtest/gtest.h>

#include "helpers.hpp"
#include "wmsim/errors.hpp"
#include "wmsim/resources.hpp"
#include "wmsim/system.hpp"

namespace wmsim {
namespace {

TEST(ResourceVector, ZeroEntriesAreNotStored) {
  ResourceVector a{{"core", 2}, {"gpu", 0}};
  EXPECT_EQ(a, (ResourceVector{{"core", 2}}));
  EXPECT_EQ(a.get("gpu"), 0);
  EXPECT_THROW(a.set("mem", -1), std::invalid_argument);
}

TEST(ResourceVector, Arithmetic) {
  ResourceVector a{{"core", 2}, {"mem", 10}};
  ResourceVector b{{"core", 1}};
  EXPECT_EQ(a + b, (ResourceVector{{"core", 3}, {"mem", 10}}));
  a -= b;
  EXPECT_EQ(a.get("core"), 1);
  EXPECT_THROW((b -= ResourceVector{{"mem", 1}}), std::domain_error);
  EXPECT_TRUE(b.fits_within(a));
  EXPECT_FALSE(a.fits_within(b));
  EXPECT_EQ((b * 3).get("core"), 3);
}

TEST(ResourceVector, TextRoundTrip) {
  ResourceVector a{{"mem", 1000}, {"core", 4}};
  EXPECT_EQ(a.to_string(), "core=4,mem=1000");
  EXPECT_EQ(ResourceVector::parse(a.to_string()), a);
  EXPECT_EQ(ResourceVector::parse(""), ResourceVector{});
  EXPECT_THROW(ResourceVector::parse("core"), std::invalid_argument);
}

TEST(LoadConfig, SethFigure) {
  const auto cfg = testing::seth_config();
  EXPECT_EQ(cfg.system_name, "Seth - HPC2N");
  EXPECT_EQ(cfg.start_time, 1027839845);
  ASSERT_EQ(cfg.groups.size(), 1u);
  EXPECT_EQ(cfg.groups[0].capacity, (ResourceVector{{"core", 4}, {"mem", 1000000}}));
  EXPECT_EQ(cfg.node_count(), 120);
  EXPECT_EQ(cfg.total_capacity().get("core"), 480);
  EXPECT_EQ(cfg.total_capacity().get("mem"), 120000000);
  EXPECT_EQ(cfg.equivalence.at("processor"), (Equivalence{"core", 2}));
}

TEST(LoadConfig, TwoGroupTotals) {
  const auto cfg = load_config(R"({"system_name": "x", "start_time": 0,
    "groups": {"g0": {"core": 4}, "g1": {"core": 8, "gpu": 2}},
    "resources": {"g0": 2, "g1": 2}})");
  EXPECT_EQ(cfg.total_capacity(), (ResourceVector{{"core", 24}, {"gpu", 4}}));
}

TEST(LoadConfig, Errors) {
  try {
    load_config(R"({"system_name": "x", "start_time": 0, "groups": {"g0": {"core": 4}},
      "resources": {"g0": 1, "g1": 2}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "resources.g1");
  }
  EXPECT_THROW(load_config(R"({"system_name": "x", "start_time": 0, "groups": {"g0": {"core": 4}},
      "resources": {"g0": 0}})"),
               ConfigError);
  EXPECT_THROW(load_config(R"({"system_name": "x", "start_time": 0, "groups": {"g0": {"core": 0}},
      "resources": {"g0": 1}})"),
               ConfigError);
  EXPECT_THROW(load_config("{not json"), ConfigError);
  EXPECT_THROW(load_config(R"({"system_name": "x", "start_time": 0, "equivalence": {"processor": {"core": 0}},
      "groups": {"g0": {"core": 4}}, "resources": {"g0": 1}})"),
               ConfigError);
}

TEST(LoadConfig, HashIsStable) {
  EXPECT_EQ(testing::seth_config().hash(), testing::seth_config().hash());
  EXPECT_EQ(testing::seth_config().hash().size(), 16u);
  auto other = testing::seth_config();
  other.groups[0].count = 121;
  EXPECT_NE(other.hash(), testing::seth_config().hash());
}

TEST(NodePool, BuildOrder) {
  const auto cfg = load_config(R"({"system_name": "x", "start_time": 0,
    "groups": {"g0": {"core": 4}, "g1": {"core": 8, "gpu": 2}},
    "resources": {"g0": 2, "g1": 2}})");
  NodePool pool(cfg);
  ASSERT_EQ(pool.size(), 4u);
  EXPECT_EQ(pool.node_id(0), "g0_0");
  EXPECT_EQ(pool.node_id(1), "g0_1");
  EXPECT_EQ(pool.node_id(2), "g1_0");
  EXPECT_EQ(pool.node_id(3), "g1_1");
  for (std::size_t n = 0; n < pool.size(); ++n) EXPECT_EQ(pool.free_vector(n), pool.capacity_vector(n));

  NodePool seth(testing::seth_config());
  EXPECT_EQ(seth.size(), 120u);
  EXPECT_EQ(seth.node_id(119), "g0_119");
}

TEST(NodePool, AllocateRelease) {
  NodePool pool(testing::uniform_config(1, {{"core", 4}}));
  Allocation a{1, {0}, {2}};
  pool.allocate(a);
  EXPECT_EQ(pool.used_vector(0), (ResourceVector{{"core", 2}}));
  pool.release(a);
  EXPECT_EQ(pool.used_vector(0), ResourceVector{});
  EXPECT_THROW(pool.allocate(Allocation{2, {0}, {5}}), OversubscriptionError);
  EXPECT_EQ(pool.used_vector(0), ResourceVector{});

  pool.allocate(Allocation{3, {0}, {2}});
  pool.allocate(Allocation{4, {0}, {2}});
  EXPECT_EQ(pool.free_vector(0), ResourceVector{});
  EXPECT_THROW(pool.release(Allocation{5, {0}, {5}}), AccountingError);
  EXPECT_THROW(pool.allocate(Allocation{6, {0, 0}, {0}}), OversubscriptionError);
  EXPECT_TRUE(pool.consistent());
}

TEST(NodePool, Utilization) {
  NodePool pool(testing::seth_config());
  for (const auto& u : pool.utilization()) EXPECT_EQ(u.ratio, 0.0);
  const auto core = *pool.types().index("core");
  Quantities req(pool.type_count(), 0);
  req[core] = 2;
  pool.allocate(Allocation{1, {0}, req});
  for (const auto& u : pool.utilization()) {
    if (u.type == "core") EXPECT_DOUBLE_EQ(u.ratio, 2.0 / 480.0);
  }
  NodePool small(testing::uniform_config(2, {{"core", 2}}));
  small.allocate(Allocation{1, {0, 1}, {2}});
  EXPECT_EQ(small.utilization()[0].ratio, 1.0);
}

TEST(NodePool, AllocateReleaseIsIdentity) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    const auto cfg = testing::random_config(rng);
    NodePool pool(cfg);
    const NodePool before = pool;
    std::vector<Allocation> live;
    for (std::size_t n = 0; n < pool.size(); ++n) {
      Quantities req(pool.type_count());
      for (std::size_t r = 0; r < req.size(); ++r) req[r] = pool.free(n, r) / 2;
      Allocation a{static_cast<JobId>(n), {static_cast<std::uint32_t>(n)}, req};
      pool.allocate(a);
      live.push_back(a);
    }
    EXPECT_TRUE(pool.consistent());
    for (const auto& a : live) pool.release(a);
    for (std::size_t n = 0; n < pool.size(); ++n) EXPECT_EQ(pool.used_vector(n), before.used_vector(n));
  }
}

TEST(JobRecord, Check) {
  auto j = testing::job(1, 0, 10, 1, {{"core", 1}});
  EXPECT_EQ(check_job_record(j), "");
  j.duration = 0;
  EXPECT_NE(check_job_record(j), "");
  j.duration = 1;
  j.per_node_request = {};
  EXPECT_NE(check_job_record(j), "");
}

}  // namespace
}  // namespace wmsim
