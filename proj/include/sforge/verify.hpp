#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace sforge {

struct VerifyOptions {
  int grad_probes = 100;
  double grad_tol = 1e-4;
  int filter_traces = 1000;
  uint64_t seed = 2024;
  // Test seam (negative control): skews the analytic gradients by this
  // amount so the finite-difference comparison must fail.
  double inject_grad_bug = 0.0;
};

struct GradCheckResult {
  int probes = 0;
  double max_rel_err = 0.0;
};

// Random nets [d,32,32,32,1] across dims {1,3,4,5} and both activations;
// every parameter gradient and input gradient is compared against central
// finite differences (h = 1e-5).  Relative error uses a 1e-6 denominator
// floor so near-zero gradients are compared absolutely.
GradCheckResult check_gradients(int probes, uint64_t seed, double inject_bug = 0.0);

// Brute-force grid scans asserting each oracle's documented optimum
// dominates its landscape.
bool check_oracle_maxima(std::string& detail);

// median_filter / moving_average vs naive per-window references on random
// traces, plus the spike-on-plateau peak value, all compared bitwise.
bool check_signal_equivalence(int traces, uint64_t seed, std::string& detail);

// Prints one pass/fail line per check; returns 0 only if all pass.
int run_verify(const VerifyOptions& opt, std::ostream& out);

}  // namespace sforge
