#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wmsim/job.hpp"
#include "wmsim/resources.hpp"

namespace wmsim {

/// How one trace column converts into a machine resource, e.g.
/// "processor" -> {core, 2}: one traced processor is two cores.
struct Equivalence {
  std::string resource;
  Quantity multiplier = 1;

  friend bool operator==(const Equivalence&, const Equivalence&) = default;
};

using EquivalenceMap = std::map<std::string, Equivalence, std::less<>>;

struct NodeGroup {
  std::string name;
  ResourceVector capacity;  // per node
  std::int64_t count = 0;
};

/// The synthetic machine: node groups with per-node capacity vectors.
struct SystemConfig {
  std::string system_name;
  std::int64_t start_time = 0;  // epoch seconds of trace time zero
  EquivalenceMap equivalence;
  std::vector<NodeGroup> groups;  // declaration order

  std::int64_t node_count() const;
  ResourceVector total_capacity() const;
  /// Sorted union of resource type names across groups.
  ResourceTypes resource_types() const;
  /// Largest per-node quantity of `type` over all groups (0 if absent).
  Quantity max_per_node(std::string_view type) const;
  /// Stable 64-bit FNV-1a digest of the canonical JSON form, as 16 hex digits.
  std::string hash() const;
  std::string to_json() const;
};

/// Parses the JSON system description:
///   {"system_name": ..., "start_time": ..., "equivalence": {"processor": {"core": 2}},
///    "groups": {"g0": {"core": 4, "mem": 1000000}}, "resources": {"g0": 120}}
/// Throws ConfigError naming the offending field.
SystemConfig load_config(std::string_view json_text);
SystemConfig load_config_file(const std::filesystem::path& path);

/// Placement of one job: `nodes` are distinct pool indices, each receiving
/// `per_node` (dense, in the pool's ResourceTypes order).
struct Allocation {
  JobId job_id = 0;
  std::vector<std::uint32_t> nodes;
  Quantities per_node;

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

struct ResourceUsage {
  std::string type;
  Quantity used = 0;
  Quantity capacity = 0;
  double ratio = 0.0;
};

/// Live per-node accounting for one simulation.
///
/// Invariant: 0 <= used <= capacity for every node and resource type.
class NodePool {
 public:
  explicit NodePool(const SystemConfig& cfg);

  std::size_t size() const noexcept { return ids_.size(); }
  const ResourceTypes& types() const noexcept { return types_; }
  std::size_t type_count() const noexcept { return types_.size(); }

  const std::string& node_id(std::size_t node) const { return ids_[node]; }
  const std::string& group(std::size_t node) const { return groups_[node]; }

  std::span<const Quantity> capacity(std::size_t node) const {
    return {capacity_.data() + node * width(), width()};
  }
  std::span<const Quantity> used(std::size_t node) const {
    return {used_.data() + node * width(), width()};
  }
  Quantity free(std::size_t node, std::size_t type) const {
    return capacity_[node * width() + type] - used_[node * width() + type];
  }
  ResourceVector capacity_vector(std::size_t node) const { return types_.named(capacity(node)); }
  ResourceVector used_vector(std::size_t node) const { return types_.named(used(node)); }
  ResourceVector free_vector(std::size_t node) const;

  /// Throws OversubscriptionError (pool untouched) if any entry exceeds the
  /// node's free capacity or nodes repeat.
  void allocate(const Allocation& alloc);
  /// Throws AccountingError (pool untouched) if any entry exceeds usage.
  void release(const Allocation& alloc);

  std::vector<ResourceUsage> utilization() const;

  /// Whether `nodes` x `per_node` fits on this machine when it is empty.
  bool satisfiable(std::int64_t nodes, std::span<const Quantity> per_node) const;

  /// True when 0 <= used <= capacity holds everywhere.
  bool consistent() const;

  std::string format_nodes(const Allocation& alloc) const;

 private:
  std::size_t width() const noexcept { return types_.size(); }
  void check_entries(const Allocation& alloc) const;

  ResourceTypes types_;
  std::vector<std::string> ids_;
  std::vector<std::string> groups_;
  Quantities capacity_;
  Quantities used_;
};

}  // namespace wmsim
