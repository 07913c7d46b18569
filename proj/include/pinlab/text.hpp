#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pinlab {

/// Lowercased word tokens. Word characters are ASCII letters and digits plus any
/// byte >= 0x80, so UTF-8 words stay whole; everything else separates.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);

}  // namespace pinlab
