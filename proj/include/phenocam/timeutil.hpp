#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace phenocam {

using Timestamp = std::chrono::sys_seconds;

// Accepts YYYY-MM-DDTHH:MM:SS with an optional fractional part (truncated) and
// an optional zone designator: Z, +HH:MM or -HH:MM. No designator means UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Same as parse_timestamp but throws Error naming the offending text.
Timestamp require_timestamp(std::string_view text);

// YYYY-MM-DDTHH:MM:SSZ
std::string format_timestamp(Timestamp t);

// YYYY-MM-DD (UTC)
std::string format_date(Timestamp t);

// Fractional days from `origin` to `t`.
double days_between(Timestamp origin, Timestamp t);

}  // namespace phenocam
