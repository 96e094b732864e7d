#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace polyfuse::text {

/// Whitespace-and-punctuation tokenizer for Persian and Latin text.
///
/// Arabic-script letters, digits and diacritics are word characters. A
/// zero-width non-joiner (U+200C) inside a word is kept, so compound forms such
/// as "می‌خواهم" stay one token; joiners at token edges are dropped. Arabic
/// Yeh/Kaf are mapped to their Persian forms and tatweel is removed. Only Latin
/// ranges are lowercased. Invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view transcript);

/// Appends the UTF-8 encoding of a code point.
void append_utf8(std::string& out, char32_t cp);

}  // namespace polyfuse::text
