#include "nestplay/text_util.h"

namespace nestplay {

std::vector<long long> extract_integers(std::string_view text) {
  std::vector<long long> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (!std::isdigit(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    bool negative = false;
    if (start > 0 && text[start - 1] == '-') {
      negative = start < 2 ||
                 !std::isalnum(static_cast<unsigned char>(text[start - 2]));
    }
    // Digits glued to letters ("Top40") are part of a word, not a number.
    if (start > 0 && std::isalpha(static_cast<unsigned char>(text[start - 1]))) {
      continue;
    }
    long long value = 0;
    bool overflow = false;
    for (std::size_t k = start; k < i; ++k) {
      if (value > (LLONG_MAX - 9) / 10) {
        overflow = true;
        break;
      }
      value = value * 10 + (text[k] - '0');
    }
    if (overflow) continue;
    out.push_back(negative ? -value : value);
  }
  return out;
}

std::optional<long long> last_integer(std::string_view text) {
  auto all = extract_integers(text);
  if (all.empty()) return std::nullopt;
  return all.back();
}

std::optional<long long> first_integer(std::string_view text) {
  auto all = extract_integers(text);
  if (all.empty()) return std::nullopt;
  return all.front();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace nestplay
