#pragma once

#include <iosfwd>

namespace excursion {

/// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace excursion
