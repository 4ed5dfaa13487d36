#ifndef ESDELAY_CLI_APP_HPP
#define ESDELAY_CLI_APP_HPP

namespace esdelay::cli {

// exit codes: 0 success, 1 infeasibility, 2 usage error, 3 verification failure
int run(int argc, const char* const* argv);

}  // namespace esdelay::cli

#endif
