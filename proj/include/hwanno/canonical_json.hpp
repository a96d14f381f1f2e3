#pragma once

#include <string>

#include "json.hpp"

namespace hwanno {

// Compact JSON with keys in byte order and every floating-point number
// written with exactly six decimals, so equal documents serialise to equal
// bytes. Integers and strings are written as nlohmann::json would.
std::string canonical_dump(const nlohmann::json& value);

}  // namespace hwanno
