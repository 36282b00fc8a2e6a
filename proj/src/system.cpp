#include "wmsim/system.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wmsim/errors.hpp"

namespace wmsim {

using ojson = nlohmann::ordered_json;

std::string check_job_record(const JobRecord& job) {
  if (job.job_id < 1) return "job_id must be positive";
  if (job.submit_time < 0) return "submit_time must be non-negative";
  if (job.duration < 1) return "duration must be >= 1";
  if (job.wall_time_estimate < 1) return "wall_time_estimate must be >= 1";
  if (job.requested_nodes < 1) return "requested_nodes must be >= 1";
  if (!job.per_node_request.any_positive()) return "per_node_request has no positive entry";
  return {};
}

std::int64_t SystemConfig::node_count() const {
  std::int64_t n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

ResourceVector SystemConfig::total_capacity() const {
  ResourceVector total;
  for (const auto& g : groups) total += g.capacity * g.count;
  return total;
}

ResourceTypes SystemConfig::resource_types() const {
  std::set<std::string> names;
  for (const auto& g : groups) {
    for (const auto& [k, v] : g.capacity.entries()) names.insert(k);
  }
  return ResourceTypes(std::vector<std::string>(names.begin(), names.end()));
}

Quantity SystemConfig::max_per_node(std::string_view type) const {
  Quantity m = 0;
  for (const auto& g : groups) {
    if (g.count > 0) m = std::max(m, g.capacity.get(type));
  }
  return m;
}

std::string SystemConfig::to_json() const {
  ojson j;
  j["system_name"] = system_name;
  j["start_time"] = start_time;
  j["equivalence"] = ojson::object();
  for (const auto& [col, eq] : equivalence) j["equivalence"][col] = {{eq.resource, eq.multiplier}};
  j["groups"] = ojson::object();
  j["resources"] = ojson::object();
  for (const auto& g : groups) {
    ojson cap = ojson::object();
    for (const auto& [k, v] : g.capacity.entries()) cap[k] = v;
    j["groups"][g.name] = cap;
    j["resources"][g.name] = g.count;
  }
  return j.dump();
}

std::string SystemConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::int64_t require_int(const ojson& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<std::int64_t>();
}

}  // namespace

SystemConfig load_config(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const ojson::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "expected a JSON object");

  SystemConfig cfg;
  if (j.contains("system_name")) {
    if (!j["system_name"].is_string()) throw ConfigError("system_name", "expected a string");
    cfg.system_name = j["system_name"].get<std::string>();
  }
  if (j.contains("start_time")) cfg.start_time = require_int(j["start_time"], "start_time");

  if (j.contains("equivalence")) {
    const auto& eq = j["equivalence"];
    if (!eq.is_object()) throw ConfigError("equivalence", "expected an object");
    for (const auto& [col, target] : eq.items()) {
      const std::string path = "equivalence." + col;
      if (!target.is_object() || target.size() != 1) {
        throw ConfigError(path, "expected an object with exactly one resource type");
      }
      const auto& [res, mult] = *target.items().begin();
      const auto m = require_int(mult, path + "." + res);
      if (m < 1) throw ConfigError(path + "." + res, "multiplier must be >= 1");
      cfg.equivalence[col] = Equivalence{res, m};
    }
  }

  if (!j.contains("groups") || !j["groups"].is_object()) throw ConfigError("groups", "missing or not an object");
  if (!j.contains("resources") || !j["resources"].is_object()) {
    throw ConfigError("resources", "missing or not an object");
  }
  for (const auto& [name, cap] : j["groups"].items()) {
    const std::string path = "groups." + name;
    if (!cap.is_object()) throw ConfigError(path, "expected an object of integers");
    NodeGroup g;
    g.name = name;
    for (const auto& [res, q] : cap.items()) {
      const auto v = require_int(q, path + "." + res);
      if (v < 0) throw ConfigError(path + "." + res, "quantity must be non-negative");
      g.capacity.set(res, v);
    }
    if (!g.capacity.any_positive()) throw ConfigError(path, "capacity has no positive entry");
    cfg.groups.push_back(std::move(g));
  }
  for (const auto& [name, count] : j["resources"].items()) {
    const std::string path = "resources." + name;
    auto it = std::find_if(cfg.groups.begin(), cfg.groups.end(), [&](const NodeGroup& g) { return g.name == name; });
    if (it == cfg.groups.end()) throw ConfigError(path, "unknown group '" + name + "'");
    const auto n = require_int(count, path);
    if (n < 1) throw ConfigError(path, "node count must be positive");
    it->count = n;
  }
  if (cfg.node_count() < 1) throw ConfigError("resources", "configuration defines no nodes");
  return cfg;
}

SystemConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open system configuration '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

NodePool::NodePool(const SystemConfig& cfg) : types_(cfg.resource_types()) {
  const auto n = static_cast<std::size_t>(cfg.node_count());
  ids_.reserve(n);
  groups_.reserve(n);
  capacity_.reserve(n * width());
  for (const auto& g : cfg.groups) {
    const auto dense = *types_.densify(g.capacity);
    for (std::int64_t i = 0; i < g.count; ++i) {
      ids_.push_back(g.name + "_" + std::to_string(i));
      groups_.push_back(g.name);
      capacity_.insert(capacity_.end(), dense.begin(), dense.end());
    }
  }
  used_.assign(capacity_.size(), 0);
}

ResourceVector NodePool::free_vector(std::size_t node) const {
  ResourceVector out;
  for (std::size_t r = 0; r < width(); ++r) out.set(types_.name(r), free(node, r));
  return out;
}

void NodePool::check_entries(const Allocation& alloc) const {
  if (alloc.per_node.size() != width()) {
    throw OversubscriptionError("job " + std::to_string(alloc.job_id) + ": request has wrong dimension");
  }
  std::vector<std::uint32_t> seen(alloc.nodes);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw OversubscriptionError("job " + std::to_string(alloc.job_id) + ": node listed twice");
  }
  if (alloc.nodes.empty()) throw OversubscriptionError("job " + std::to_string(alloc.job_id) + ": empty allocation");
}

void NodePool::allocate(const Allocation& alloc) {
  check_entries(alloc);
  for (auto node : alloc.nodes) {
    if (node >= size()) throw OversubscriptionError("job " + std::to_string(alloc.job_id) + ": no such node");
    for (std::size_t r = 0; r < width(); ++r) {
      if (alloc.per_node[r] < 0 || alloc.per_node[r] > free(node, r)) {
        throw OversubscriptionError("job " + std::to_string(alloc.job_id) + " oversubscribes " + ids_[node] + " on " +
                                    types_.name(r) + ": requested " + std::to_string(alloc.per_node[r]) + ", free " +
                                    std::to_string(free(node, r)));
      }
    }
  }
  for (auto node : alloc.nodes) {
    for (std::size_t r = 0; r < width(); ++r) used_[node * width() + r] += alloc.per_node[r];
  }
}

void NodePool::release(const Allocation& alloc) {
  if (alloc.per_node.size() != width()) throw AccountingError("release with wrong dimension");
  for (auto node : alloc.nodes) {
    if (node >= size()) throw AccountingError("release on unknown node");
    for (std::size_t r = 0; r < width(); ++r) {
      if (alloc.per_node[r] > used_[node * width() + r]) {
        throw AccountingError("job " + std::to_string(alloc.job_id) + " releases more " + types_.name(r) +
                              " than used on " + ids_[node]);
      }
    }
  }
  for (auto node : alloc.nodes) {
    for (std::size_t r = 0; r < width(); ++r) used_[node * width() + r] -= alloc.per_node[r];
  }
}

std::vector<ResourceUsage> NodePool::utilization() const {
  std::vector<ResourceUsage> out;
  for (std::size_t r = 0; r < width(); ++r) {
    ResourceUsage u{types_.name(r)};
    for (std::size_t n = 0; n < size(); ++n) {
      u.used += used_[n * width() + r];
      u.capacity += capacity_[n * width() + r];
    }
    u.ratio = u.capacity > 0 ? static_cast<double>(u.used) / static_cast<double>(u.capacity) : 0.0;
    out.push_back(std::move(u));
  }
  return out;
}

bool NodePool::satisfiable(std::int64_t nodes, std::span<const Quantity> per_node) const {
  std::int64_t ok = 0;
  for (std::size_t n = 0; n < size() && ok < nodes; ++n) {
    const auto cap = capacity(n);
    bool fits = true;
    for (std::size_t r = 0; r < width(); ++r) fits = fits && per_node[r] <= cap[r];
    ok += fits ? 1 : 0;
  }
  return ok >= nodes;
}

bool NodePool::consistent() const {
  for (std::size_t i = 0; i < used_.size(); ++i) {
    if (used_[i] < 0 || used_[i] > capacity_[i]) return false;
  }
  return true;
}

std::string NodePool::format_nodes(const Allocation& alloc) const {
  std::string out;
  for (auto n : alloc.nodes) {
    if (!out.empty()) out += ';';
    out += ids_[n];
  }
  return out;
}

}  // namespace wmsim
