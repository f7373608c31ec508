#include <doctest.h>

#include <bit>
#include <cstdlib>
#include <random>
#include <utility>

#include "memfp/bitmap_features.hpp"

using namespace memfp;

namespace {

// Independent O(W*8*W*8) recount straight from the definitions.
SpatialBitStats naive_stats(const ErrorBitmap& b, Adjacency adj) {
  const int w = b.dq_width();
  SpatialBitStats s{};
  int min_dq = w, max_dq = -1, min_beat = 8, max_beat = -1;
  bool dq_seen[8] = {}, beat_seen[8] = {};
  for (int dq = 0; dq < w; ++dq)
    for (int beat = 0; beat < 8; ++beat) {
      if (!b.test(dq, beat)) continue;
      ++s.total_bits;
      dq_seen[dq] = beat_seen[beat] = true;
      min_dq = std::min(min_dq, dq);
      max_dq = std::max(max_dq, dq);
      min_beat = std::min(min_beat, beat);
      max_beat = std::max(max_beat, beat);
    }
  for (int i = 0; i < 8; ++i) {
    s.dq_count += dq_seen[i];
    s.beat_count += beat_seen[i];
  }
  s.dq_interval = max_dq - min_dq;
  s.beat_interval = max_beat - min_beat;
  for (int d1 = 0; d1 < w; ++d1)
    for (int b1 = 0; b1 < 8; ++b1)
      for (int d2 = 0; d2 < w; ++d2)
        for (int b2 = 0; b2 < 8; ++b2) {
          if (!b.test(d1, b1) || !b.test(d2, b2)) continue;
          if (std::make_pair(d1, b1) >= std::make_pair(d2, b2)) continue;  // unordered pairs
          const bool horiz = b1 == b2 && std::abs(d1 - d2) == 1;
          const bool vert = d1 == d2 && std::abs(b1 - b2) == 1;
          const bool hit = adj == Adjacency::FourNeighbor ? (horiz || vert)
                           : adj == Adjacency::HorizontalOnly ? horiz
                                                              : vert;
          s.adjacent_pairs += hit;
        }
  return s;
}

std::uint64_t random_bits(std::mt19937_64& rng, int w) {
  const std::uint64_t mask = w == 4 ? 0xffffffffull : ~0ull;
  std::uint64_t bits = 0;
  while (bits == 0) {
    // bias toward sparse bitmaps but include dense ones
    bits = rng() & rng() & mask;
    if (rng() % 4 == 0) bits = rng() & mask;
  }
  return bits;
}

}  // namespace

TEST_CASE("singleton bit") {
  ErrorBitmap b(4, 1ull << (5 * 4 + 2));  // (dq 2, beat 5)
  SpatialBitStats s = spatial_features(b);
  CHECK(s.total_bits == 1);
  CHECK(s.adjacent_pairs == 0);
  CHECK(s.dq_count == 1);
  CHECK(s.beat_count == 1);
  CHECK(s.dq_interval == 0);
  CHECK(s.beat_interval == 0);
}

TEST_CASE("horizontal neighbor pair") {
  ErrorBitmap b(4, 0b11);  // (0,0) and (1,0)
  SpatialBitStats s = spatial_features(b);
  CHECK(s.total_bits == 2);
  CHECK(s.adjacent_pairs == 1);
  CHECK(s.dq_count == 2);
  CHECK(s.beat_count == 1);
  CHECK(s.dq_interval == 1);
  CHECK(s.beat_interval == 0);
}

TEST_CASE("full x4 grid") {
  ErrorBitmap b(4, 0xffffffffull);
  SpatialBitStats s = spatial_features(b);
  CHECK(s.total_bits == 32);
  CHECK(s.adjacent_pairs == 52);  // 8*3 horizontal + 4*7 vertical
  CHECK(s.dq_count == 4);
  CHECK(s.beat_count == 8);
  CHECK(s.dq_interval == 3);
  CHECK(s.beat_interval == 7);
}

TEST_CASE("matches the naive double-loop oracle on random bitmaps") {
  std::mt19937_64 rng(20240901);
  for (Adjacency adj :
       {Adjacency::FourNeighbor, Adjacency::HorizontalOnly, Adjacency::VerticalOnly}) {
    for (int w : {4, 8}) {
      for (int i = 0; i < 2000; ++i) {
        ErrorBitmap b(w, random_bits(rng, w));
        SpatialBitStats got = spatial_features(b, adj);
        SpatialBitStats want = naive_stats(b, adj);
        REQUIRE(got.total_bits == want.total_bits);
        REQUIRE(got.adjacent_pairs == want.adjacent_pairs);
        REQUIRE(got.dq_count == want.dq_count);
        REQUIRE(got.beat_count == want.beat_count);
        REQUIRE(got.dq_interval == want.dq_interval);
        REQUIRE(got.beat_interval == want.beat_interval);
      }
    }
  }
}

TEST_CASE("adding a bit never decreases any statistic") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const int w = (i % 2) ? 8 : 4;
    std::uint64_t bits = random_bits(rng, w);
    const int free_bit = static_cast<int>(rng() % (w * 8));
    if (bits & (1ull << free_bit)) continue;
    SpatialBitStats before = spatial_features(ErrorBitmap(w, bits));
    SpatialBitStats after = spatial_features(ErrorBitmap(w, bits | (1ull << free_bit)));
    CHECK(after.total_bits >= before.total_bits);
    CHECK(after.dq_count >= before.dq_count);
    CHECK(after.beat_count >= before.beat_count);
    CHECK(after.dq_interval >= before.dq_interval);
    CHECK(after.beat_interval >= before.beat_interval);
  }
}

TEST_CASE("merge: identity, disjoint union, and set-union oracle") {
  ErrorBitmap one(4, 0x10ull);
  CHECK(merge_bitmaps({one}) == one);

  ErrorBitmap a(4, 1ull), b(4, 1ull << 31);
  CHECK(merge_bitmaps({a, b}).popcount() == 2);

  CHECK_THROWS(merge_bitmaps({ErrorBitmap(4, 1), ErrorBitmap(8, 1)}));

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ErrorBitmap> set;
    std::uint64_t expected = 0;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      std::uint64_t bits = random_bits(rng, 8);
      expected |= bits;
      set.emplace_back(8, bits);
    }
    ErrorBitmap merged = merge_bitmaps(set);
    CHECK(merged.raw() == expected);
    CHECK(merged.popcount() == std::popcount(expected));
  }
}
