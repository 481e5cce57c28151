#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "infosample/errors.hpp"

namespace infosample {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode code);

/// Accepts single seeds and inclusive ranges: {"3", "0..2"} -> 3, 0, 1, 2.
std::vector<std::uint64_t> parse_seed_list(const std::vector<std::string>& tokens);

/// Entry point of the `infosample` tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace infosample
