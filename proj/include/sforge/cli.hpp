#pragma once

#include <iostream>

namespace sforge {

// Full command-line front end; out receives normal command output so tests
// can capture it.  Returns the process exit code: 0 success, 1 failure
// (verify or internal), 2 config/usage, 3 oracle evaluation.
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout);

}  // namespace sforge
