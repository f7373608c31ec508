#include "memfp/bitmap_features.hpp"

#include <bit>

namespace memfp {

SpatialBitStats spatial_features(const ErrorBitmap& bitmap, Adjacency adjacency) {
  const int w = bitmap.dq_width();
  const std::uint64_t bits = bitmap.raw();

  SpatialBitStats st;
  st.total_bits = bitmap.popcount();

  std::uint32_t dq_mask = 0, beat_mask = 0;
  for (int beat = 0; beat < kBeats; ++beat) {
    std::uint64_t row = (bits >> (beat * w)) & ((1ull << w) - 1);
    if (row) beat_mask |= 1u << beat;
    dq_mask |= static_cast<std::uint32_t>(row);
  }
  st.dq_count = std::popcount(dq_mask);
  st.beat_count = std::popcount(beat_mask);
  st.dq_interval = (31 - std::countl_zero(dq_mask)) - std::countr_zero(dq_mask);
  st.beat_interval = (31 - std::countl_zero(beat_mask)) - std::countr_zero(beat_mask);

  const bool horiz = adjacency != Adjacency::VerticalOnly;
  const bool vert = adjacency != Adjacency::HorizontalOnly;
  for (int beat = 0; beat < kBeats; ++beat) {
    std::uint64_t row = (bits >> (beat * w)) & ((1ull << w) - 1);
    if (horiz) st.adjacent_pairs += std::popcount(row & (row >> 1));
    if (vert && beat + 1 < kBeats) {
      std::uint64_t next = (bits >> ((beat + 1) * w)) & ((1ull << w) - 1);
      st.adjacent_pairs += std::popcount(row & next);
    }
  }
  return st;
}

ErrorBitmap merge_bitmaps(const std::vector<ErrorBitmap>& bitmaps) {
  if (bitmaps.empty()) throw std::invalid_argument("merge_bitmaps: empty list");
  const int w = bitmaps.front().dq_width();
  std::uint64_t bits = 0;
  for (const auto& b : bitmaps) {
    if (b.dq_width() != w) throw std::invalid_argument("merge_bitmaps: mixed dq widths");
    bits |= b.raw();
  }
  return ErrorBitmap(w, bits);
}

}  // namespace memfp
