#pragma once

// Per-run bookkeeping shared by the optimizers and the harness.

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace hwqoc {

struct TracePoint {
  long iteration = 0;
  double best_cost = 1.0;  // monotone nonincreasing by construction
  double fidelity = 0.0;   // fidelity of the current iterate
  double wall_ms = 0.0;    // cumulative; excluded from determinism contract
};

// One optimizer run on one seed. n_evals counts simulator work in
// cost-evaluation equivalents: a forward cost is 1, a gradient is 3 (one
// forward plus a backward pass of comparable cost).
struct RunResult {
  std::uint64_t seed = 0;
  std::vector<TracePoint> trace;
  Eigen::MatrixXd best_schedule;
  double final_fidelity = 0.0;
  double final_error = 1.0;
  std::string termination;
  double wall_ms = 0.0;
  long n_evals = 0;
  long switch_iteration = -1;  // hybrid runs: first refinement iteration
  std::vector<std::string> gate_strings;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace hwqoc
