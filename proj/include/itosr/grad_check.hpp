#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace itosr {

struct GradCheckOptions {
  double tolerance = 1e-4;  // max relative error
  double step = 1e-4;       // central-difference step
  int instances = 20;
  std::uint64_t seed = 1;
  // Harness self-test: scales one analytic gradient so its check must fail.
  bool inject_bug = false;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  // Coordinates whose perturbation crossed a ReLU kink (gradient undefined).
  std::size_t skipped = 0;
  bool pass = false;
};

// Analytic vs central-difference gradients for every network and loss of the
// baseline and the generative model, on small random instances.
std::vector<GradCheckResult> run_gradient_checks(const GradCheckOptions& opts);

// |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

}  // namespace itosr
