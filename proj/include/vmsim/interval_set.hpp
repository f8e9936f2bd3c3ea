#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <optional>

#include "vmsim/common.hpp"

namespace vmsim {

// Set of disjoint, non-abutting half-open intervals over uint64_t. Abutting
// inserts are coalesced, so the representation is canonical for a given
// point set.
class IntervalSet {
 public:
  using Map = std::map<std::uint64_t, std::uint64_t>;  // start -> end

  void insert(std::uint64_t start, std::uint64_t end) {
    if (start >= end) return;
    auto it = spans_.upper_bound(start);
    if (it != spans_.begin()) {
      auto prev = std::prev(it);
      if (prev->second >= start) {
        start = prev->first;
        end = std::max(end, prev->second);
        it = spans_.erase(prev);
      }
    }
    while (it != spans_.end() && it->first <= end) {
      end = std::max(end, it->second);
      it = spans_.erase(it);
    }
    spans_.emplace(start, end);
  }

  void erase(std::uint64_t start, std::uint64_t end) {
    if (start >= end) return;
    auto it = spans_.upper_bound(start);
    if (it != spans_.begin()) --it;
    while (it != spans_.end() && it->first < end) {
      const std::uint64_t s = it->first;
      const std::uint64_t e = it->second;
      if (e <= start) {
        ++it;
        continue;
      }
      it = spans_.erase(it);
      if (s < start) spans_.emplace(s, start);
      if (e > end) {
        spans_.emplace(end, e);
        break;
      }
    }
  }

  // True when every point of [start, end) is in the set.
  bool covers(std::uint64_t start, std::uint64_t end) const {
    if (start >= end) return true;
    auto it = spans_.upper_bound(start);
    if (it == spans_.begin()) return false;
    --it;
    return it->second >= end;
  }

  bool intersects(std::uint64_t start, std::uint64_t end) const {
    if (start >= end) return false;
    auto it = spans_.lower_bound(end);
    if (it == spans_.begin()) return false;
    --it;
    return it->second > start;
  }

  // First-fit from the low end (Up) or the high end (Down). Returns the start
  // of a sub-interval of `length` placed flush against the chosen end of the
  // first qualifying span.
  std::optional<std::uint64_t> find_fit(std::uint64_t length, Direction d) const {
    if (d == Direction::Up) {
      for (const auto& [s, e] : spans_) {
        if (e - s >= length) return s;
      }
    } else {
      for (auto it = spans_.rbegin(); it != spans_.rend(); ++it) {
        if (it->second - it->first >= length) return it->second - length;
      }
    }
    return std::nullopt;
  }

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (const auto& [s, e] : spans_) sum += e - s;
    return sum;
  }

  std::uint64_t largest() const {
    std::uint64_t best = 0;
    for (const auto& [s, e] : spans_) best = std::max(best, e - s);
    return best;
  }

  std::size_t span_count() const { return spans_.size(); }
  bool empty() const { return spans_.empty(); }
  const Map& spans() const { return spans_; }

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  Map spans_;
};

}  // namespace vmsim
