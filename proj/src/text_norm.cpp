#include "relscene/text_norm.hpp"

#include <cctype>
#include <sstream>

namespace relscene {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '.': case ',': case '!': case '?': case ';': case ':':
      case '\'': case '"': case '(': case ')':
        break;
      default:
        cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  std::vector<std::string> out;
  std::istringstream in(cleaned);
  for (std::string tok; in >> tok;) out.push_back(std::move(tok));
  return out;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::ispunct(uc)) continue;
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool at_word_boundary(std::string_view text, std::size_t pos, std::size_t len) {
  const bool left = pos == 0 || !is_word_char(text[pos - 1]);
  const bool right = pos + len >= text.size() || !is_word_char(text[pos + len]);
  return left && right;
}

bool matches_at(std::string_view text, std::size_t pos, std::string_view needle) {
  if (pos + needle.size() > text.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) !=
        static_cast<unsigned char>(needle[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace relscene
