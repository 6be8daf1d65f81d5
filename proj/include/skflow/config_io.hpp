#pragma once

#include <iosfwd>
#include <string>

#include "skflow/levy.hpp"

namespace skflow {

/// Strict schema (version 1): unknown fields are errors, so configs stay
/// reproducible. Fields: schema, dim, drift (array), intensity,
/// jump_law {kind: fixed|normal|uniform, ...}, truncation, compensate.
LevySpec read_levy_spec_json(std::istream& is);
LevySpec read_levy_spec_json_file(const std::string& filename);

std::string levy_spec_to_json(const LevySpec& spec);

} // namespace skflow
