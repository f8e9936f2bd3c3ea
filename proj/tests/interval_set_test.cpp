#include "vmsim/interval_set.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace vmsim {
namespace {

TEST(IntervalSet, InsertCoalescesAbuttingAndOverlapping) {
  IntervalSet s;
  s.insert(10, 20);
  s.insert(20, 30);
  s.insert(5, 12);
  ASSERT_EQ(s.span_count(), 1u);
  EXPECT_EQ(s.spans().begin()->first, 5u);
  EXPECT_EQ(s.spans().begin()->second, 30u);
}

TEST(IntervalSet, EraseSplits) {
  IntervalSet s;
  s.insert(0, 100);
  s.erase(40, 60);
  ASSERT_EQ(s.span_count(), 2u);
  EXPECT_TRUE(s.covers(0, 40));
  EXPECT_TRUE(s.covers(60, 100));
  EXPECT_FALSE(s.intersects(40, 60));
  EXPECT_EQ(s.total(), 80u);
}

TEST(IntervalSet, FindFitFromEitherEnd) {
  IntervalSet s;
  s.insert(0, 10);
  s.insert(20, 50);
  s.insert(60, 65);
  EXPECT_EQ(s.find_fit(5, Direction::Up), 0u);
  EXPECT_EQ(s.find_fit(11, Direction::Up), 20u);
  EXPECT_EQ(s.find_fit(5, Direction::Down), 60u);
  EXPECT_EQ(s.find_fit(6, Direction::Down), 44u);
  EXPECT_FALSE(s.find_fit(31, Direction::Down).has_value());
}

// Point-set model: every operation must agree with a std::set of unit cells.
TEST(IntervalSet, MatchesPointSetModel) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    IntervalSet s;
    std::set<std::uint64_t> model;
    for (int op = 0; op < 60; ++op) {
      std::uint64_t a = rng() % 64;
      std::uint64_t b = a + 1 + rng() % 12;
      if (rng() % 2) {
        s.insert(a, b);
        for (auto x = a; x < b; ++x) model.insert(x);
      } else {
        s.erase(a, b);
        for (auto x = a; x < b; ++x) model.erase(x);
      }
      ASSERT_EQ(s.total(), model.size());
      std::uint64_t c = rng() % 70, d = c + 1 + rng() % 8;
      bool all = true, any = false;
      for (auto x = c; x < d; ++x) {
        all &= model.count(x) > 0;
        any |= model.count(x) > 0;
      }
      ASSERT_EQ(s.covers(c, d), all);
      ASSERT_EQ(s.intersects(c, d), any);
      // Canonical form: spans never abut.
      std::uint64_t prev_end = 0;
      bool first = true;
      for (const auto& [lo, hi] : s.spans()) {
        ASSERT_LT(lo, hi);
        if (!first) ASSERT_GT(lo, prev_end);
        prev_end = hi;
        first = false;
      }
    }
  }
}

}  // namespace
}  // namespace vmsim
