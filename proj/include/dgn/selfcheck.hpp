#pragma once

#include <ostream>

namespace dgn {

// Gradient checks per op, convolution brute-force oracle, delta identities,
// fold-plan invariants. Prints one line per check; returns 0 on success,
// 1 on any failure.
int run_selfcheck(std::ostream& out);

}  // namespace dgn
