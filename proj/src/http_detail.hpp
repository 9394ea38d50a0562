#pragma once

#include <string>

namespace relscene::detail {

// Implemented next to the HTTP client so only one translation unit pulls
// in the HTTP library.
std::string base64_encode(const std::string& bytes);

}  // namespace relscene::detail
