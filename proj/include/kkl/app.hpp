#ifndef KKL_APP_HPP
#define KKL_APP_HPP

#include <ostream>

namespace kkl {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_io = 4 };

// Command-line entry point shared by the executable and the integration tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

void set_thread_count(int threads);

}  // namespace kkl

#endif
