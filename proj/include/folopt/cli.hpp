#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace folopt {

inline constexpr const char* kToolVersion = "0.1.0";

/// Command-line driver.  args excludes the program name.
/// Exit codes: 0 ok, 1 verification failure, 2 input error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace folopt
