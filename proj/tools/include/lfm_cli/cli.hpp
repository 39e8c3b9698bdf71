#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfm::cli {

/// Runs one `lfm` invocation. args excludes the program name. Results go to
/// `out`, the resolved config and diagnostics to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses `key=value` lines; blank lines and lines starting with '#' are skipped.
/// Throws lfm::FormatError on a line without '='.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

}  // namespace lfm::cli
