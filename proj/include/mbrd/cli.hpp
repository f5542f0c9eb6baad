#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace mbrd {

// Command line driver behind the mbrdec binary, callable in-process.
// `args` excludes the program name. Returns the process exit code: 0 on
// success, 2 for usage/configuration errors, 1 for data or runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace mbrd
