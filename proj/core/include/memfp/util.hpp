#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace memfp {

using Timestamp = std::int64_t;  // seconds since epoch
using Duration = std::int64_t;   // seconds

constexpr Duration kSecond = 1;
constexpr Duration kMinute = 60;
constexpr Duration kHour = 3600;
constexpr Duration kDay = 86400;

/// Parse a duration string with an s/m/h/d suffix ("15m", "24h", "5d").
/// A bare integer is taken as seconds.
Duration parse_duration(std::string_view text);

/// Render a duration back in the most compact suffix form.
std::string format_duration(Duration d);

/// FNV-1a 64-bit, used for config/manifest hashes.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Lowercase hex rendering of a 64-bit hash.
std::string hash_hex(std::uint64_t h);

/// Shortest round-trippable decimal form of a double (max_digits10).
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Run fn(i) for i in [0, n) across at most `threads` workers.
/// Results must be written to pre-sized slots so output order is
/// independent of scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace memfp
