#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace relscene {

std::string to_lower(std::string_view s);

/// Metric tokenizer: lowercase, drop . , ! ? ; : ' " ( ), split on
/// whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// Answer normalization for exact-match scoring: lowercase, every ASCII
/// punctuation character removed, whitespace collapsed and trimmed.
std::string normalize_answer(std::string_view text);

bool is_word_char(char c);

/// True when [pos, pos+len) in `text` is not glued to letters or digits on
/// either side.
bool at_word_boundary(std::string_view text, std::size_t pos, std::size_t len);

/// Case-insensitive comparison of `text` at `pos` against lowercase `needle`.
bool matches_at(std::string_view text, std::size_t pos, std::string_view needle);

}  // namespace relscene
