#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wmsim {

using Quantity = std::int64_t;

/// Named resource quantities, e.g. {core: 4, mem: 1000000}.
///
/// Missing keys read as zero and zero entries are never stored, so two
/// vectors compare equal iff they agree on every resource type.
class ResourceVector {
 public:
  using Map = std::map<std::string, Quantity, std::less<>>;

  ResourceVector() = default;
  ResourceVector(std::initializer_list<std::pair<const std::string, Quantity>> init);

  Quantity get(std::string_view type) const;
  /// Negative quantities are rejected with std::invalid_argument.
  void set(std::string_view type, Quantity q);

  const Map& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  bool any_positive() const noexcept { return !entries_.empty(); }

  /// Componentwise `*this <= other`.
  bool fits_within(const ResourceVector& other) const;

  ResourceVector& operator+=(const ResourceVector& rhs);
  /// Throws std::domain_error if any component would go negative.
  ResourceVector& operator-=(const ResourceVector& rhs);
  ResourceVector operator*(Quantity k) const;

  friend bool operator==(const ResourceVector&, const ResourceVector&) = default;

  /// "core=4,mem=1000"; empty vector formats as "".
  std::string to_string() const;
  static ResourceVector parse(std::string_view text);

 private:
  Map entries_;
};

inline ResourceVector operator+(ResourceVector a, const ResourceVector& b) { return a += b; }

/// Dense quantities laid out in ResourceTypes order.
using Quantities = std::vector<Quantity>;

/// The fixed, ordered set of resource types of one machine. Dense vectors
/// used on the simulation hot path are indexed by position in this list.
class ResourceTypes {
 public:
  ResourceTypes() = default;
  explicit ResourceTypes(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> index(std::string_view name) const;

  /// Dense form of `v`. Returns nullopt when `v` has a positive quantity of a
  /// type this machine does not have (such a request can never be satisfied).
  std::optional<Quantities> densify(const ResourceVector& v) const;
  ResourceVector named(std::span<const Quantity> dense) const;

 private:
  std::vector<std::string> names_;
};

}  // namespace wmsim
