#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ea {

/// Word tokens: maximal runs of letters or digits (any non-ASCII letter
/// counts). An apostrophe between two letters stays inside the word, so
/// contractions and possessives are single tokens.
std::vector<std::string_view> tokenize(std::string_view text);

/// Same tokens, lowercased (ASCII and Latin-1 letters).
std::vector<std::string> lowercase_tokens(std::string_view text);

std::size_t count_tokens(std::string_view text);

/// Curly quotes to straight quotes; en/em dashes and horizontal bars to "--".
std::string normalize_punctuation(std::string_view text);

/// Collapses whitespace runs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

std::string trim(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace ea
