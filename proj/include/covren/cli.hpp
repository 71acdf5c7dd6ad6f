#pragma once

#include <iosfwd>

namespace covren {

// Command-line front end. Returns 0 on success, 1 on usage errors and 2 on
// infeasible-parameter errors; output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace covren
