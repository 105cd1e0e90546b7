// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace gcnm {

// Entry point for the `gcnm` binary. Exit codes: 0 success, 2 usage or
// config error, 3 data error, 4 numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gcnm
