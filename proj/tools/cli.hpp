#pragma once

#include <ostream>

namespace coderag {

/// Entry point of the `coderag` binary. Exit status: 0 success, 1 runtime
/// failure, 2 usage or input error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coderag
