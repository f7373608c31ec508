#include "memfp/types.hpp"

#include <charconv>
#include <cstdio>

namespace memfp {

ErrorBitmap ErrorBitmap::from_hex(int dq_width, std::string_view hex) {
  if (hex.substr(0, 2) != "0x" && hex.substr(0, 2) != "0X")
    throw std::invalid_argument("ErrorBitmap: hex string must start with 0x");
  hex.remove_prefix(2);
  const std::size_t expect = dq_width == 4 ? 8 : 16;
  if (hex.size() != expect)
    throw std::invalid_argument("ErrorBitmap: expected " + std::to_string(expect) +
                                " hex digits for x" + std::to_string(dq_width));
  std::uint64_t bits = 0;
  auto [p, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), bits, 16);
  if (ec != std::errc() || p != hex.data() + hex.size())
    throw std::invalid_argument("ErrorBitmap: bad hex digits");
  return ErrorBitmap(dq_width, bits);
}

std::string ErrorBitmap::to_hex() const {
  char buf[20];
  if (dq_width_ == 4)
    std::snprintf(buf, sizeof(buf), "0x%08llx", static_cast<unsigned long long>(bits_));
  else
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(bits_));
  return buf;
}

}  // namespace memfp
