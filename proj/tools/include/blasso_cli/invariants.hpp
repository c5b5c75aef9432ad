#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace blasso::cli {

// Deliberate corruption applied to a library result before it is checked, used
// to confirm that the suite detects the damage.
enum class Fault { none, christoffel_sign };

struct InvariantResult {
    std::string suite;
    long checked = 0;
    long failures = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass() const { return failures == 0 && checked > 0; }
};

// Randomized kernel and geometry invariants over `samples` draws per suite and
// dimension d in {1, 2, 3}.
std::vector<InvariantResult> run_kernel_invariants(long samples, std::uint64_t seed, Fault fault);

}  // namespace blasso::cli
