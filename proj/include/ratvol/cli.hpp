#pragma once

namespace ratvol {

// Entry point of the ratvol tool. Exit codes: 0 success, 2 usage/config
// error, 3 numerical failure.
int run_cli(int argc, char** argv);

}  // namespace ratvol
