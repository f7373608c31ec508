#pragma once

#include <vector>

#include "memfp/types.hpp"

namespace memfp {

enum class Adjacency { FourNeighbor, HorizontalOnly, VerticalOnly };

/// Per-access spatial statistics over a DQ x beat bitmap.
struct SpatialBitStats {
  int total_bits = 0;      // popcount
  int adjacent_pairs = 0;  // unordered set-bit pairs adjacent under the config
  int dq_count = 0;        // distinct DQ lanes with >=1 error bit
  int beat_count = 0;      // distinct beats with >=1 error bit
  int dq_interval = 0;     // max error-DQ index - min error-DQ index
  int beat_interval = 0;   // max error-beat index - min error-beat index

  bool operator==(const SpatialBitStats&) const = default;
};

SpatialBitStats spatial_features(const ErrorBitmap& bitmap,
                                 Adjacency adjacency = Adjacency::FourNeighbor);

/// Cellwise OR of a nonempty list sharing one dq_width.
ErrorBitmap merge_bitmaps(const std::vector<ErrorBitmap>& bitmaps);

}  // namespace memfp
