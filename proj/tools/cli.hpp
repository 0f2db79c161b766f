#pragma once

/// @file cli.hpp
/// @brief The `netpe` command line, callable in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace netpe::cli {

/// Runs one command line (`args[0]` is the program name). Results go to
/// `out`; on failure a single line
///
///     error: code=<code> [field=<path>] message="<text>"
///
/// goes to `err` and the return value is nonzero (2 for usage and config
/// errors, 1 otherwise).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Formats the machine-parsable error line (without trailing newline).
std::string error_line(const std::string& code, const std::string& field, const std::string& message);

} // namespace netpe::cli
