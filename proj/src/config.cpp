#include "relscene/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "relscene/errors.hpp"

namespace relscene {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v, const std::string& where) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') return v;
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] != '\\') {
      out.push_back(v[i]);
      continue;
    }
    if (i + 2 >= v.size()) throw FormatError(where + ": dangling escape");
    switch (v[++i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      default: throw FormatError(where + ": unknown escape");
    }
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_value_text(const std::string& text,
                                                        const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = source + ": line " + std::to_string(lineno);
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw FormatError(where + ": empty key");
    const std::string value = unquote(trim(t.substr(eq + 1)), where);
    if (!out.emplace(key, value).second) {
      throw FormatError(where + ": field '" + key + "' given twice");
    }
  }
  return out;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_value_text(ss.str(), path.string());
}

bool parse_bool_value(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw FormatError("field '" + key + "': expected a boolean, got '" + value + "'");
}

int parse_int_value(const std::string& value, const std::string& key) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw FormatError("field '" + key + "': expected an integer, got '" + value + "'");
  }
  return out;
}

}  // namespace relscene
