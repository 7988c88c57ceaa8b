#pragma once

#include <string>
#include <string_view>

namespace cogscreen::utf8 {

/// Decodes UTF-8 into code points. Malformed bytes become U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);

bool is_space(char32_t c);
/// ASCII letters/digits plus non-ASCII letters (Latin-1 letters and anything above U+00FF).
bool is_alnum(char32_t c);
/// Simple one-to-one case folding for ASCII, Latin-1, Greek and Cyrillic.
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);

std::u32string to_lower(std::u32string_view text);

}  // namespace cogscreen::utf8
