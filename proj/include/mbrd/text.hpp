#pragma once

#include <string>
#include <string_view>

namespace mbrd {

// Decodes UTF-8 into code points. Invalid bytes become U+FFFD; decoding never
// throws so arbitrary input text is always usable.
std::u32string utf8_decode(std::string_view utf8);

// Encodes code points as UTF-8. Surrogates and out-of-range values are
// encoded as U+FFFD.
std::string utf8_encode(std::u32string_view text);

// True for the code points with the Unicode White_Space property.
bool is_unicode_whitespace(char32_t cp);

}  // namespace mbrd
