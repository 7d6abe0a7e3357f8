// Copyright 2026 The mwpx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mwpx/numbers.h"

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace mwpx {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Plain unsigned decimal: digits with at most one '.', at least one digit,
// optional thousands groups before the point.
std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string cleaned;
  std::size_t point = s.find('.');
  std::string_view int_part = s.substr(0, point);
  std::string_view frac_part =
      point == std::string_view::npos ? std::string_view{} : s.substr(point + 1);
  if (point != std::string_view::npos && frac_part.empty()) return std::nullopt;
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  if (int_part.find(',') != std::string_view::npos) {
    // 1-3 leading digits, then groups of exactly three.
    std::size_t start = 0;
    bool first = true;
    while (true) {
      std::size_t comma = int_part.find(',', start);
      std::size_t len =
          (comma == std::string_view::npos ? int_part.size() : comma) - start;
      if (first ? (len < 1 || len > 3) : len != 3) return std::nullopt;
      first = false;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  for (char c : int_part) {
    if (c == ',') continue;
    if (!is_digit(c)) return std::nullopt;
    cleaned.push_back(c);
  }
  for (char c : frac_part) {
    if (!is_digit(c)) return std::nullopt;
  }
  if (!frac_part.empty()) {
    cleaned.push_back('.');
    cleaned.append(frac_part);
  }
  if (cleaned.empty() || cleaned == ".") return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
  if (ec != std::errc{} || ptr != cleaned.data() + cleaned.size())
    return std::nullopt;
  return value;
}

std::optional<double> parse_fraction(std::string_view s) {
  std::size_t slash = s.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto num = parse_decimal(s.substr(0, slash));
  auto den = parse_decimal(s.substr(slash + 1));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

}  // namespace

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double sign = 1.0;
  if (text.front() == '-' || text.front() == '+') {
    if (text.front() == '-') sign = -1.0;
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;

  // Bracketed fraction as written in segmented text: "(1/5)".
  if (text.size() > 2 && text.front() == '(' && text.back() == ')' &&
      text.find('/') != std::string_view::npos) {
    auto frac = parse_fraction(text.substr(1, text.size() - 2));
    if (!frac) return std::nullopt;
    return sign * *frac;
  }
  if (text.back() == '%') {
    auto base = parse_decimal(text.substr(0, text.size() - 1));
    if (!base) return std::nullopt;
    return sign * *base / 100.0;
  }
  // Mixed number a(b/c).
  if (std::size_t open = text.find('(');
      open != std::string_view::npos && text.back() == ')') {
    auto whole = parse_decimal(text.substr(0, open));
    auto frac = parse_fraction(text.substr(open + 1, text.size() - open - 2));
    if (!whole || !frac) return std::nullopt;
    return sign * (*whole + *frac);
  }
  if (text.find('/') != std::string_view::npos) {
    auto frac = parse_fraction(text);
    if (!frac) return std::nullopt;
    return sign * *frac;
  }
  auto value = parse_decimal(text);
  if (!value) return std::nullopt;
  return sign * *value;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace mwpx
