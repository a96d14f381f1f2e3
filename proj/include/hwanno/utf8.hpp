#pragma once

#include <string>
#include <string_view>

namespace hwanno::utf8 {

// Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
std::string encode(char32_t c);

bool is_alpha(char32_t c);
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);

}  // namespace hwanno::utf8
