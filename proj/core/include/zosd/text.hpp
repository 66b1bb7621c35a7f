#pragma once

#include <string>
#include <string_view>

namespace zosd {

/// Lowercases UTF-8 text. Covers ASCII, Latin-1, Latin Extended-A, Greek and
/// Cyrillic capitals; other code points pass through unchanged. Invalid UTF-8
/// bytes are copied as-is.
std::string to_lower_utf8(std::string_view text);

/// Case-insensitive comparison key for label names.
inline std::string fold_key(std::string_view name) { return to_lower_utf8(name); }

bool is_valid_utf8(std::string_view text) noexcept;

std::string_view trim(std::string_view text) noexcept;

}  // namespace zosd
