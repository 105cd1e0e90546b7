// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "gcnm/cli.hpp"

int main(int argc, char** argv) { return gcnm::run_cli(argc, argv, std::cout, std::cerr); }
