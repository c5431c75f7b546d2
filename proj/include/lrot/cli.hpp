#pragma once

#include <ostream>

namespace lrot {

inline constexpr const char* kVersion = "1.0.0";

/// Entry point of the lowrank-ot tool. Returns 0 on success, 2 on usage or
/// input errors and 1 on numerical failure.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lrot
