#include "ibcolor/info.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ibcolor {

void validate_distribution(std::span<const double> p, double tol) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw std::invalid_argument("distribution has a negative or NaN entry");
    total += x;
  }
  if (std::abs(total - 1.0) > tol) {
    throw std::invalid_argument("distribution does not sum to 1");
  }
}

double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

double kl_divergence_nats(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) {
      throw std::invalid_argument("kl_divergence: negative or NaN entry");
    }
    if (p[i] > 0.0) {
      if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
      d += p[i] * std::log(p[i] / q[i]);
    }
  }
  // Rounding can push an exact-zero divergence slightly negative.
  return d < 0.0 ? 0.0 : d;
}

double kl_divergence_bits(std::span<const double> p, std::span<const double> q) {
  return kl_divergence_nats(p, q) / kLn2;
}

double mutual_information_bits(const Matrix& joint) {
  double total = 0.0;
  for (std::size_t r = 0; r < joint.rows(); ++r) {
    for (double x : joint.row(r)) {
      if (!(x >= 0.0)) throw std::invalid_argument("mutual_information: negative or NaN entry");
      total += x;
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("mutual_information: joint does not sum to 1");
  }

  Vec row_marg(joint.rows(), 0.0), col_marg(joint.cols(), 0.0);
  for (std::size_t r = 0; r < joint.rows(); ++r) {
    auto row = joint.row(r);
    for (std::size_t c = 0; c < joint.cols(); ++c) {
      row_marg[r] += row[c];
      col_marg[c] += row[c];
    }
  }

  double mi = 0.0;
  for (std::size_t r = 0; r < joint.rows(); ++r) {
    auto row = joint.row(r);
    for (std::size_t c = 0; c < joint.cols(); ++c) {
      if (row[c] > 0.0) {
        mi += row[c] * std::log2(row[c] / (row_marg[r] * col_marg[c]));
      }
    }
  }
  return mi < 0.0 ? 0.0 : mi;
}

}  // namespace ibcolor
