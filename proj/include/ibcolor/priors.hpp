#pragma once

// The cognitive source: per-language least-informative priors, taken as the
// capacity-achieving input distribution of the naming channel q_l(w|c) via
// Blahut-Arimoto, and their cross-language average.

#include <cstdint>
#include <vector>

#include "ibcolor/matrix.hpp"

namespace ibcolor {

struct LanguagePrior {
  int language_id = 0;
  Vec probs;              // over chips, floored at 1e-12 and renormalized
  double capacity = 0.0;  // bits
  bool converged = true;
  double gap = 0.0;       // final upper-lower capacity bound gap, bits
  int iterations = 0;
};

struct CognitiveSource {
  Vec probs;
  std::vector<int> language_ids;
};

// Capacity-achieving prior of the channel given by the encoder rows
// (chips x words). tol is the capacity gap bound in bits. Non-convergence is
// reported through the flags, with the last iterate intact. A channel with
// identical rows has capacity zero and returns the uniform prior.
LanguagePrior reference_prior(const Matrix& channel, double tol = 1e-10, int max_iter = 100000);

// KKT optimality margin of a (prior, capacity) pair for a channel: the
// largest violation of D[q(.|c) || q(.)] <= capacity (+ the largest equality
// gap over chips with prior mass > 1e-9), in bits. Small at the optimum.
double capacity_kkt_violation_bits(const Matrix& channel, const Vec& prior, double capacity);

// Arithmetic per-chip mean with compensated summation. Throws on an empty
// list or mismatched supports.
CognitiveSource average_source(const std::vector<LanguagePrior>& priors);

}  // namespace ibcolor
