#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>

#include "memfp/util.hpp"

namespace memfp {

constexpr int kBeats = 8;

struct MemoryAddress {
  int socket = 0;
  int channel = 0;
  int slot = 0;
  int rank = 0;
  int device = 0;
  int bank_group = 0;
  int bank = 0;
  int row = 0;
  int column = 0;

  auto tie() const {
    return std::tie(socket, channel, slot, rank, device, bank_group, bank, row, column);
  }
  bool operator==(const MemoryAddress& o) const { return tie() == o.tie(); }
  bool operator<(const MemoryAddress& o) const { return tie() < o.tie(); }
};

/// W x 8 grid of erroneous checking bits for one memory access.
/// Bit index i = beat * W + dq, stored LSB-first in `bits`, so an x4
/// bitmap is exactly 32 bits (8 hex digits) and an x8 one is 64.
class ErrorBitmap {
 public:
  ErrorBitmap(int dq_width, std::uint64_t bits) : dq_width_(dq_width), bits_(bits) {
    if (dq_width != 4 && dq_width != 8)
      throw std::invalid_argument("ErrorBitmap: dq_width must be 4 or 8");
    if (bits == 0) throw std::invalid_argument("ErrorBitmap: all-zero bitmap");
    if (dq_width == 4 && (bits >> 32) != 0)
      throw std::invalid_argument("ErrorBitmap: bits out of range for x4");
  }

  static ErrorBitmap from_hex(int dq_width, std::string_view hex);

  int dq_width() const { return dq_width_; }
  std::uint64_t raw() const { return bits_; }

  bool test(int dq, int beat) const {
    return (bits_ >> (beat * dq_width_ + dq)) & 1u;
  }
  int popcount() const { return std::popcount(bits_); }

  /// "0x" + 8 hex digits for W=4, 16 for W=8.
  std::string to_hex() const;

  bool operator==(const ErrorBitmap& o) const {
    return dq_width_ == o.dq_width_ && bits_ == o.bits_;
  }

 private:
  int dq_width_;
  std::uint64_t bits_;
};

struct CEEvent {
  Timestamp ts = 0;
  std::string dimm_id;
  MemoryAddress address;
  std::optional<ErrorBitmap> bitmap;

  bool operator==(const CEEvent& o) const {
    return ts == o.ts && dimm_id == o.dimm_id && address == o.address && bitmap == o.bitmap;
  }
};

struct UEEvent {
  Timestamp ts = 0;
  std::string dimm_id;

  bool operator==(const UEEvent& o) const { return ts == o.ts && dimm_id == o.dimm_id; }
};

enum class DataWidth { x4 = 4, x8 = 8 };

inline int dq_width_of(DataWidth w) { return static_cast<int>(w); }

struct DimmSpec {
  std::string dimm_id;
  std::string manufacturer;  // A/B/C/D/other
  int capacity_gb = 0;
  DataWidth data_width = DataWidth::x4;
  int frequency_mhz = 0;
  std::string process_class;  // p20nm / other
  int server_age_days = 0;

  bool operator==(const DimmSpec& o) const {
    return dimm_id == o.dimm_id && manufacturer == o.manufacturer &&
           capacity_gb == o.capacity_gb && data_width == o.data_width &&
           frequency_mhz == o.frequency_mhz && process_class == o.process_class &&
           server_age_days == o.server_age_days;
  }
};

}  // namespace memfp
