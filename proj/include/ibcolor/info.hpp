#pragma once

// Scalar information measures. Reported quantities (entropy, KL, mutual
// information) are in bits throughout the project; the solver's exponent is
// the one place that works in nats, and says so at the call site.

#include <span>

#include "ibcolor/matrix.hpp"

namespace ibcolor {

inline constexpr double kLn2 = 0.6931471805599453094;

// Throws std::invalid_argument if p has a negative entry or does not sum to 1
// within tol.
void validate_distribution(std::span<const double> p, double tol = 1e-9);

double entropy_bits(std::span<const double> p);

// KL divergence in bits. Returns +infinity when p puts mass where q has none;
// the infinity is produced deliberately, never via a NaN or a 0-division.
double kl_divergence_bits(std::span<const double> p, std::span<const double> q);
double kl_divergence_nats(std::span<const double> p, std::span<const double> q);

// Mutual information in bits of a joint distribution given as a matrix.
// Validates nonnegativity and normalization (tolerance 1e-9) and applies the
// 0 log 0 = 0 convention.
double mutual_information_bits(const Matrix& joint);

}  // namespace ibcolor
