#pragma once

#include <ostream>

namespace ufda::cli {

// Entry point of the ufdanet tool: synth | train | eval | plot. Returns the exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ufda::cli
