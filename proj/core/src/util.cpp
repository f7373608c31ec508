#include "memfp/util.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <mutex>
#include <thread>

namespace memfp {

Duration parse_duration(std::string_view text) {
  if (text.empty()) throw ConfigError("empty duration");
  Duration mult = 1;
  std::string_view num = text;
  switch (text.back()) {
    case 's': mult = kSecond; num.remove_suffix(1); break;
    case 'm': mult = kMinute; num.remove_suffix(1); break;
    case 'h': mult = kHour; num.remove_suffix(1); break;
    case 'd': mult = kDay; num.remove_suffix(1); break;
    default: break;
  }
  std::int64_t value = 0;
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
  if (ec != std::errc() || p != num.data() + num.size())
    throw ConfigError("bad duration: " + std::string(text));
  return value * mult;
}

std::string format_duration(Duration d) {
  if (d != 0 && d % kDay == 0) return std::to_string(d / kDay) + "d";
  if (d != 0 && d % kHour == 0) return std::to_string(d / kHour) + "h";
  if (d != 0 && d % kMinute == 0) return std::to_string(d / kMinute) + "m";
  return std::to_string(d) + "s";
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest form that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char trial[64];
    std::snprintf(trial, sizeof(trial), "%.*g", prec, v);
    double back = 0;
    std::sscanf(trial, "%lf", &back);
    if (back == v) return trial;
  }
  return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace memfp
