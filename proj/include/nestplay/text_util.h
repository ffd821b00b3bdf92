#ifndef NESTPLAY_TEXT_UTIL_H_
#define NESTPLAY_TEXT_UTIL_H_

#include <cctype>
#include <climits>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nestplay {

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

// All signed integers appearing in the text, in order. A '-' counts as a sign
// only when it is not preceded by a digit or letter ("3-4" is 3 and 4).
std::vector<long long> extract_integers(std::string_view text);

std::optional<long long> last_integer(std::string_view text);
std::optional<long long> first_integer(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view s);

}  // namespace nestplay

#endif  // NESTPLAY_TEXT_UTIL_H_
