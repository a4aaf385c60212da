#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace pispin {

/// 64-bit FNV-1a. Stable across platforms and runs.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of several fields with a separator that cannot appear in UTF-8 text.
template <typename... Parts>
std::uint64_t hash_fields(const Parts&... parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  ((h = fnv1a64(std::string_view(parts), h), h = fnv1a64("\xff", h)), ...);
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// splitmix64 step; also a good integer mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Small deterministic generator producing doubles in [0, 1).
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_ - 0x9e3779b97f4a7c15ULL);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace pispin
