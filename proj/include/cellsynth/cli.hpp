#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cellsynth {

/// Exit codes: 0 success, 1 runtime failure, 2 validation error or bad usage.
int cli_main(int argc, char** argv);
/// `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cellsynth
