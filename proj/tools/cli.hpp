#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "multimix/model.hpp"

namespace multimix::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // I/O errors and failed checks
  kConfigError = 2,
  kNumericFailure = 3,
};

/// Entry point of the `multimix` tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct GradCheckRow {
  std::string mode;
  GradCheckResult result;
};

/// Analytic against central-difference gradients for every loss mode on a
/// D=6, d=8, m=4, n=6, r=4, c=3 instance. `corrupt` perturbs one analytic
/// coordinate per mode.
std::vector<GradCheckRow> gradcheck_suite(std::uint64_t seed, bool corrupt = false);

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckStep = 1e-4;

}  // namespace multimix::cli
