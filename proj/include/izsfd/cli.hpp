#pragma once

#include <ostream>

namespace izsfd {

// Exit status: 0 success, 1 runtime error (diagnostic on `err`), 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace izsfd
