#pragma once

#include <string>
#include <string_view>

#include "coedit/core.hpp"

namespace coedit::testing {

inline Text T(std::string_view utf8) { return from_utf8(utf8); }
inline std::string S(const Text& text) { return to_utf8(text); }

}  // namespace coedit::testing
