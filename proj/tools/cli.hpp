#pragma once

#include <iosfwd>

namespace morphtag {

// Runs one `morphtag` invocation. Exit codes: 0 success, 1 usage or
// configuration error, 2 data error (unreadable or malformed input).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace morphtag
