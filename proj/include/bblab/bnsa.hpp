#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bblab/oracle.hpp"
#include "bblab/rng.hpp"
#include "bblab/signal.hpp"

namespace bblab {

enum class StepRule { Backtracking, Fixed };

struct AttackConfig {
  double bisection_tolerance = 1e-7;  // absolute tolerance on the ray scalar
  double probe_step = 1e-2;           // per-dimension direction perturbation
  int max_iterations = 20;            // outer descent iterations
  StepRule step_rule = StepRule::Backtracking;
  double improvement_tol = 0.02;  // stop when relative distortion gain drops below
  int bracket_doublings = 64;
};

struct TracePoint {
  int iteration = 0;
  double distortion = 0.0;
  std::uint64_t cumulative_queries = 0;
};

struct AttackResult {
  Signal final_signal;
  std::uint64_t queries_used = 0;
  bool removed = false;
  double distortion = 0.0;        // squared distance to the attacked signal
  double psnr_to_original = 0.0;  // dB versus the attacked signal
  int outer_iterations = 0;       // accepted descent steps
  std::vector<TracePoint> trace;
};

struct BoundaryHit {
  double alpha = 0.0;
  Signal point;  // origin + alpha * direction, on the absent side
};

// Finds the detector flip along origin + alpha*direction by geometric
// bracket expansion followed by bisection. Throws BracketError when no sign
// change appears within the doubling budget (direction parallel to the
// boundary, or the boundary is unreachable).
BoundaryHit locate_boundary(BinarySession& session, const Signal& origin,
                            const Signal& direction, const AttackConfig& cfg);

// Finite-difference gradient of d(h(t)) at t = boundary_point - origin:
// perturbs one direction component at a time, re-maps to the boundary with a
// warm-started bisection, and differences the squared distances. Costs
// Theta(dim * log(1/tolerance)) queries.
Signal estimate_gradient(BinarySession& session, const Signal& boundary_point,
                         const Signal& origin, const AttackConfig& cfg);

// Blind sensitivity attack against a binary detector: random starting
// direction, boundary mapping via bisection, gradient descent on the
// boundary distance. On a linear boundary one outer iteration reaches the
// orthogonal projection.
AttackResult bnsa(BinarySession& session, const Signal& marked, const AttackConfig& cfg,
                  Rng& rng);

// Alternative starting position: grays out the smallest pixel prefix that
// flips the detector. Throws when even the fully gray image stays detected.
Signal gray_start(BinarySession& session, const Signal& marked);

void write_attack_trace_csv(const std::string& path, const AttackResult& result);

}  // namespace bblab
