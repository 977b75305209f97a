#pragma once

namespace uwct {

// Entry point behind the uwct binary; exposed for in-process testing.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run_cli(int argc, const char* const* argv);

}  // namespace uwct
