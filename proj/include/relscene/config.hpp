#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace relscene {

/// Plain-text configuration: one `key = value` per line, blank lines and
/// lines starting with '#' ignored. Surrounding whitespace is trimmed
/// unless the value is wrapped in double quotes; inside quotes "\n", "\t",
/// "\"" and "\\" are unescaped. Duplicate keys are a FormatError.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_key_value_text(const std::string& text,
                                                        const std::string& source);

bool parse_bool_value(const std::string& value, const std::string& key);
int parse_int_value(const std::string& value, const std::string& key);

}  // namespace relscene
