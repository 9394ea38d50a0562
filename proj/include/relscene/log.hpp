#pragma once

#include <string_view>

namespace relscene {

/// Writes "warning: <msg>" to stderr unless warnings are silenced.
void warn(std::string_view msg);
void set_warnings_enabled(bool enabled);

}  // namespace relscene
