#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

// Lexical-form helpers shared by condition checking, query evaluation and
// charting.

namespace kgdiff::values {

/// Strict decimal/scientific number parse of the whole string (leading and
/// trailing ASCII whitespace allowed). Rejects NaN/inf spellings.
std::optional<double> parse_number(std::string_view lexical);

/// Parses `YYYY-MM-DD` or `YYYY-MM-DDThh:mm:ss[.fff][Z|±hh:mm]` (optionally
/// with a leading '-' on the year) into seconds since 1970-01-01T00:00:00Z.
std::optional<double> parse_datetime(std::string_view lexical);

/// "true"/"1" → true, "false"/"0" → false.
std::optional<bool> parse_boolean(std::string_view lexical);

/// Normalized `YYYY-MM-DDThh:mm:ss` (UTC) for a parsed date/dateTime.
std::optional<std::string> normalize_datetime(std::string_view lexical);

/// Epoch seconds → `YYYY-MM-DDThh:mm:ssZ`.
std::string format_iso8601(double epoch_seconds);

/// ASCII lower-casing (non-ASCII bytes pass through unchanged).
std::string ascii_lower(std::string_view s);

/// Shortest round-trippable rendering of a double ("3", "2.5", "1e+300").
std::string format_number(double v);

}  // namespace kgdiff::values
