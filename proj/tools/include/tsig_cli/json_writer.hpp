#pragma once

#include <string>

#include "json.hpp"

namespace tsig::cli {

// Deterministic serialization: keys sorted, two-space indent, doubles printed
// with 17 significant digits, non-finite values as null.
std::string write_json(const nlohmann::json& value);

// Single-line form for error objects on stderr.
std::string write_json_compact(const nlohmann::json& value);

}  // namespace tsig::cli
