#pragma once

#include <iosfwd>

namespace isect::cli {

/// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
int run(int argc, char** argv);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace isect::cli
