#include "wmsim/resources.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace wmsim {

ResourceVector::ResourceVector(std::initializer_list<std::pair<const std::string, Quantity>> init) {
  for (const auto& [k, v] : init) set(k, v);
}

Quantity ResourceVector::get(std::string_view type) const {
  auto it = entries_.find(type);
  return it == entries_.end() ? 0 : it->second;
}

void ResourceVector::set(std::string_view type, Quantity q) {
  if (q < 0) throw std::invalid_argument("negative quantity for resource '" + std::string(type) + "'");
  if (q == 0) {
    if (auto it = entries_.find(type); it != entries_.end()) entries_.erase(it);
    return;
  }
  if (auto it = entries_.find(type); it != entries_.end()) {
    it->second = q;
  } else {
    entries_.emplace(std::string(type), q);
  }
}

bool ResourceVector::fits_within(const ResourceVector& other) const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.second <= other.get(e.first); });
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& rhs) {
  for (const auto& [k, v] : rhs.entries_) set(k, get(k) + v);
  return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& rhs) {
  for (const auto& [k, v] : rhs.entries_) {
    const Quantity cur = get(k);
    if (cur < v) throw std::domain_error("resource '" + k + "' would become negative");
  }
  for (const auto& [k, v] : rhs.entries_) set(k, get(k) - v);
  return *this;
}

ResourceVector ResourceVector::operator*(Quantity k) const {
  ResourceVector out;
  for (const auto& [name, v] : entries_) out.set(name, v * k);
  return out;
}

std::string ResourceVector::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    if (!out.empty()) out += ',';
    out += k;
    out += '=';
    out += std::to_string(v);
  }
  return out;
}

ResourceVector ResourceVector::parse(std::string_view text) {
  ResourceVector out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("bad resource item '" + std::string(item) + "'");
    Quantity q = 0;
    const auto num = item.substr(eq + 1);
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), q);
    if (ec != std::errc{} || p != num.data() + num.size()) {
      throw std::invalid_argument("bad resource quantity '" + std::string(item) + "'");
    }
    out.set(item.substr(0, eq), q);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

ResourceTypes::ResourceTypes(std::vector<std::string> names) : names_(std::move(names)) {}

std::optional<std::size_t> ResourceTypes::index(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::optional<Quantities> ResourceTypes::densify(const ResourceVector& v) const {
  Quantities out(names_.size(), 0);
  for (const auto& [k, q] : v.entries()) {
    auto i = index(k);
    if (!i) return std::nullopt;
    out[*i] = q;
  }
  return out;
}

ResourceVector ResourceTypes::named(std::span<const Quantity> dense) const {
  ResourceVector out;
  for (std::size_t i = 0; i < dense.size() && i < names_.size(); ++i) out.set(names_[i], dense[i]);
  return out;
}

}  // namespace wmsim
