#pragma once

#include <iosfwd>
#include <string>

#include "skflow/path.hpp"

namespace skflow {

/// CSV format: header `t,v1,...,vdim,kind`, one row per breakpoint with
/// kind `anchor`, or two rows (`jump-pre` with the left limit, then
/// `jump-post` with the right value) at a jump. Values use shortest
/// round-trip decimal representation.
void write_path_csv(std::ostream& os, const CadlagPath& path);
void write_path_csv(const std::string& filename, const CadlagPath& path);

CadlagPath read_path_csv(std::istream& is);
CadlagPath read_path_csv(const std::string& filename);

/// Shortest decimal string that parses back to exactly this double.
std::string format_double(double x);

} // namespace skflow
