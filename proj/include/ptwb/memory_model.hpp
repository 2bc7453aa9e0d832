#pragma once

// Abstract memory locations and the points-to lattice shared by every engine.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptwb/error.hpp"

namespace ptwb {

enum class LocKind : std::uint8_t { Null, Unknown, Var, Field, Array, Heap, Func, Addr };

struct LocId {
  std::uint32_t value = 0;
  auto operator<=>(const LocId&) const = default;
};

inline constexpr LocId kNullLoc{0};
inline constexpr LocId kUnknownLoc{1};

/// Function index inside a ProgramIR; -1 marks "no owning function" (globals).
using FuncId = int;
inline constexpr FuncId kNoFunction = -1;

struct LocInfo {
  LocKind kind = LocKind::Var;
  std::string name;      // canonical name used in every report ("g:p", "heap:7", ...)
  std::string display;   // short human form ("p", "main::p")
  FuncId owner = kNoFunction;
  int pointer_depth = 0; // levels of indirection of the value stored in this cell
  bool is_temp = false;
  bool is_formal = false;
  bool is_return_slot = false;
  bool is_const = false;
  int heap_line = 0;
  FuncId func = kNoFunction;  // for Func locations
};

/// Heap-by-callsite cells and monolithic arrays stand for many concrete cells.
inline bool is_summary_kind(LocKind k) { return k == LocKind::Heap || k == LocKind::Array; }

/// Locations that can hold a pointer value and therefore appear as map keys.
inline bool is_key_kind(LocKind k) {
  return k == LocKind::Var || k == LocKind::Field || k == LocKind::Array ||
         k == LocKind::Heap || k == LocKind::Addr;
}

class LocationTable {
 public:
  LocationTable() {
    LocInfo null_info;
    null_info.kind = LocKind::Null;
    null_info.name = null_info.display = "null";
    add(std::move(null_info));
    LocInfo unknown_info;
    unknown_info.kind = LocKind::Unknown;
    unknown_info.name = unknown_info.display = "unknown";
    add(std::move(unknown_info));
  }

  /// Returns the existing id when a location with the same canonical name exists.
  LocId intern(LocInfo info) {
    if (auto it = by_name_.find(info.name); it != by_name_.end()) return it->second;
    return add(std::move(info));
  }

  std::optional<LocId> find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  const LocInfo& operator[](LocId id) const { return locs_.at(id.value); }
  LocInfo& mutable_info(LocId id) { return locs_.at(id.value); }
  const std::string& name(LocId id) const { return locs_.at(id.value).name; }
  std::size_t size() const { return locs_.size(); }

  bool is_summary(LocId id) const { return is_summary_kind((*this)[id].kind); }
  bool is_key(LocId id) const { return is_key_kind((*this)[id].kind); }
  /// Locals, formals, temporaries and return slots of `f`.
  bool is_private_to(LocId id, FuncId f) const {
    return f != kNoFunction && (*this)[id].owner == f;
  }

 private:
  LocId add(LocInfo info) {
    LocId id{static_cast<std::uint32_t>(locs_.size())};
    by_name_.emplace(info.name, id);
    locs_.push_back(std::move(info));
    return id;
  }

  std::vector<LocInfo> locs_;
  std::unordered_map<std::string, LocId> by_name_;
};

/// Sorted, duplicate-free set of locations.  Copies share storage; every
/// change builds a fresh vector.
class LocSet {
 public:
  using const_iterator = std::vector<LocId>::const_iterator;

  LocSet() = default;
  LocSet(std::initializer_list<LocId> ids) : LocSet(std::vector<LocId>(ids)) {}
  explicit LocSet(std::vector<LocId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    assign(std::move(ids));
  }

  bool insert(LocId id) {
    const auto& v = items();
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it != v.end() && *it == id) return false;
    std::vector<LocId> next;
    next.reserve(v.size() + 1);
    next.insert(next.end(), v.begin(), it);
    next.push_back(id);
    next.insert(next.end(), it, v.end());
    assign(std::move(next));
    return true;
  }

  /// Returns true when the set grew.
  bool union_with(const LocSet& other) {
    if (other.empty() || items_ == other.items_) return false;
    if (empty()) {
      items_ = other.items_;
      return true;
    }
    if (other.subset_of(*this)) return false;
    const auto& a = items();
    const auto& b = other.items();
    std::vector<LocId> merged;
    merged.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
    assign(std::move(merged));
    return true;
  }

  bool contains(LocId id) const { return std::binary_search(begin(), end(), id); }
  bool subset_of(const LocSet& other) const {
    if (items_ == other.items_) return true;
    return std::includes(other.begin(), other.end(), begin(), end());
  }
  bool strict_subset_of(const LocSet& other) const { return size() < other.size() && subset_of(other); }

  bool empty() const { return !items_; }
  std::size_t size() const { return items_ ? items_->size() : 0; }
  const_iterator begin() const { return items().begin(); }
  const_iterator end() const { return items().end(); }
  const std::vector<LocId>& items() const {
    static const std::vector<LocId> kNone;
    return items_ ? *items_ : kNone;
  }

  bool operator==(const LocSet& o) const { return items_ == o.items_ || items() == o.items(); }
  std::strong_ordering operator<=>(const LocSet& o) const { return items() <=> o.items(); }

 private:
  void assign(std::vector<LocId> v) {
    if (v.empty())
      items_.reset();
    else
      items_ = std::make_shared<const std::vector<LocId>>(std::move(v));
  }

  std::shared_ptr<const std::vector<LocId>> items_;  // null when empty
};

/// Pointer key -> non-empty set of pointees. An absent key means "no information".
class PointsToMap {
 public:
  using Binding = std::pair<LocId, LocSet>;
  using Bindings = std::vector<Binding>;  // sorted by key

  const LocSet& get(LocId key) const {
    static const LocSet kEmpty;
    auto it = find(key);
    return it == bindings_.end() || it->first != key ? kEmpty : it->second;
  }
  bool has(LocId key) const {
    auto it = find(key);
    return it != bindings_.end() && it->first == key;
  }

  /// Strong binding; binding to the empty set removes the key.
  void set(LocId key, LocSet value) {
    auto it = find(key);
    bool present = it != bindings_.end() && it->first == key;
    if (value.empty()) {
      if (present) bindings_.erase(it);
    } else if (present) {
      it->second = std::move(value);
    } else {
      bindings_.insert(it, {key, std::move(value)});
    }
  }

  /// Weak binding; returns true when the map grew.
  bool join(LocId key, const LocSet& value) {
    if (value.empty()) return false;
    auto it = find(key);
    if (it == bindings_.end() || it->first != key) {
      bindings_.insert(it, {key, value});
      return true;
    }
    return it->second.union_with(value);
  }

  void erase(LocId key) {
    auto it = find(key);
    if (it != bindings_.end() && it->first == key) bindings_.erase(it);
  }
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  const Bindings& bindings() const { return bindings_; }
  auto begin() const { return bindings_.begin(); }
  auto end() const { return bindings_.end(); }

  /// Key-wise union; returns true when this map grew.
  bool join_all(const PointsToMap& other) {
    if (other.bindings_.empty()) return false;
    if (bindings_.empty()) {
      bindings_ = other.bindings_;
      return true;
    }
    Bindings merged;
    merged.reserve(bindings_.size() + other.bindings_.size());
    bool changed = false;
    auto a = bindings_.cbegin();
    auto b = other.bindings_.cbegin();
    while (a != bindings_.cend() || b != other.bindings_.cend()) {
      if (b == other.bindings_.end() || (a != bindings_.end() && a->first < b->first)) {
        merged.push_back(*a++);
      } else if (a == bindings_.end() || b->first < a->first) {
        merged.push_back(*b++);
        changed = true;
      } else {
        merged.push_back(*a++);
        changed |= merged.back().second.union_with(b->second);
        ++b;
      }
    }
    if (changed) bindings_ = std::move(merged);
    return changed;
  }

  bool operator==(const PointsToMap&) const = default;
  auto operator<=>(const PointsToMap&) const = default;

 private:
  Bindings::iterator find(LocId key) {
    return std::lower_bound(bindings_.begin(), bindings_.end(), key,
                            [](const Binding& b, LocId k) { return b.first < k; });
  }
  Bindings::const_iterator find(LocId key) const {
    return std::lower_bound(bindings_.begin(), bindings_.end(), key,
                            [](const Binding& b, LocId k) { return b.first < k; });
  }

  Bindings bindings_;
};

/// Top (std::nullopt) is the identity of meet and marks "not yet reached".
using FlowValue = std::optional<PointsToMap>;

inline FlowValue meet(const FlowValue& a, const FlowValue& b) {
  if (!a) return b;
  if (!b) return a;
  PointsToMap out = *a;
  out.join_all(*b);
  return out;
}

/// True iff `a` is at least as precise as `b`: a(k) is a subset of b(k) for every key.
inline bool leq(const PointsToMap& a, const PointsToMap& b) {
  for (const auto& [k, v] : a)
    if (!v.subset_of(b.get(k))) return false;
  return true;
}

inline bool leq(const FlowValue& a, const FlowValue& b) {
  if (!a) return true;
  if (!b) return false;
  return leq(*a, *b);
}

// Canonical JSON ------------------------------------------------------------

inline nlohmann::json set_to_json(const LocSet& s, const LocationTable& table) {
  std::vector<std::string> names;
  names.reserve(s.size());
  for (LocId id : s) names.push_back(table.name(id));
  std::sort(names.begin(), names.end());
  return names;
}

inline nlohmann::json to_json(const PointsToMap& m, const LocationTable& table) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : m) out[table.name(k)] = set_to_json(v, table);
  return out;
}

inline LocSet set_from_json(const nlohmann::json& j, const LocationTable& table) {
  LocSet out;
  for (const auto& item : j) {
    auto id = table.find(item.get<std::string>());
    if (!id) throw Error("unknown location name '" + item.get<std::string>() + "'");
    out.insert(*id);
  }
  return out;
}

inline PointsToMap from_json(const nlohmann::json& j, const LocationTable& table) {
  if (!j.is_object()) throw Error("points-to map must be a JSON object");
  PointsToMap out;
  for (const auto& [key, value] : j.items()) {
    auto id = table.find(key);
    if (!id) throw Error("unknown location name '" + key + "'");
    out.set(*id, set_from_json(value, table));
  }
  return out;
}

}  // namespace ptwb
