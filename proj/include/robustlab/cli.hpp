#pragma once

#include <string>
#include <vector>

namespace robustlab::cli {

// Entry point behind main(). Exit codes: 0 success, 2 usage/config errors,
// 3 runtime failures.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace robustlab::cli
