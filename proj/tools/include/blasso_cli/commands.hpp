#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blasso_cli/run_config.hpp"

namespace blasso::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

int run_certify(const RunConfig& rc, std::ostream& log);
int run_solve(const RunConfig& rc, std::ostream& log);
int run_rates(const RunConfig& rc, std::ostream& log);

// Loads an n x d sample matrix from a CSV file with one column per coordinate;
// a non-numeric first line is treated as a header.
SampleMatrix load_samples(const std::string& path, int d);

// Full command line entry point: parses arguments, dispatches, and maps
// exceptions to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blasso::cli
