#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace autoconfidence {

// Calendar dates are day-resolution points; durations are integer day counts.
using Date = std::chrono::sys_days;

// Parses "YYYY-MM-DD". Throws ValidationError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline long days_between(Date from, Date to) { return (to - from).count(); }

inline Date make_date(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

}  // namespace autoconfidence
