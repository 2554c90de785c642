#pragma once

#include <string>
#include <vector>

namespace iqaforge::cli {

// Subcommands: calibrate, build, score, sqb, ksweep, eval, summarize.
// Returns 0 on success, 1 on a runtime failure, 2 on a usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace iqaforge::cli
