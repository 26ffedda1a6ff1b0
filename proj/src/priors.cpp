#include "ibcolor/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ibcolor/info.hpp"

namespace ibcolor {

namespace {

// D[q(.|c) || q(.)] in nats for every chip row against the output marginal.
Vec row_divergences_nats(const Matrix& channel, const Vec& prior) {
  const std::size_t n = channel.rows();
  const std::size_t k = channel.cols();
  Vec out_marginal(k, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    if (prior[c] == 0.0) continue;
    axpy(out_marginal.data(), prior[c], channel.row(c).data(), k);
  }
  Vec d(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const double* row = channel.row(c).data();
    double s = 0.0;
    for (std::size_t w = 0; w < k; ++w) {
      if (row[w] > 0.0) {
        // A positive channel entry forces a positive marginal whenever the
        // prior is strictly positive, which the iteration maintains.
        s += row[w] * std::log(row[w] / out_marginal[w]);
      }
    }
    d[c] = s;
  }
  return d;
}

}  // namespace

LanguagePrior reference_prior(const Matrix& channel, double tol, int max_iter) {
  if (channel.rows() == 0 || channel.cols() == 0) {
    throw std::invalid_argument("reference_prior: empty channel");
  }
  const std::size_t n = channel.rows();

  LanguagePrior result;
  result.probs.assign(n, 1.0 / static_cast<double>(n));
  result.converged = false;

  double capacity_nats = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vec d = row_divergences_nats(channel, result.probs);
    double lower = 0.0;  // I(p) = sum_c p(c) d(c), a lower bound on capacity
    double upper = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      lower += result.probs[c] * d[c];
      upper = std::max(upper, d[c]);
    }
    result.iterations = it;
    result.gap = (upper - lower) / kLn2;
    capacity_nats = lower;
    if (result.gap < tol) {
      result.converged = true;
      break;
    }
    // p'(c) ~ p(c) exp(d(c)), in log space.
    Vec logp(n);
    double max_logp = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      logp[c] = (result.probs[c] > 0.0 ? std::log(result.probs[c]) : -1e300) + d[c];
      max_logp = std::max(max_logp, logp[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      result.probs[c] = std::exp(logp[c] - max_logp);
      total += result.probs[c];
    }
    for (double& p : result.probs) p /= total;
  }

  result.capacity = std::max(0.0, capacity_nats / kLn2);

  // Floor vanishing chips so downstream IB quantities stay defined, then
  // renormalize. Perturbs the capacity-achieving point by < 1e-9 bits.
  double total = 0.0;
  for (double& p : result.probs) {
    p = std::max(p, 1e-12);
    total += p;
  }
  for (double& p : result.probs) p /= total;
  return result;
}

double capacity_kkt_violation_bits(const Matrix& channel, const Vec& prior, double capacity) {
  Vec d = row_divergences_nats(channel, prior);
  double violation = 0.0;
  for (std::size_t c = 0; c < channel.rows(); ++c) {
    double d_bits = d[c] / kLn2;
    violation = std::max(violation, d_bits - capacity);
    if (prior[c] > 1e-9) violation = std::max(violation, std::abs(d_bits - capacity));
  }
  return violation;
}

CognitiveSource average_source(const std::vector<LanguagePrior>& priors) {
  if (priors.empty()) throw std::invalid_argument("average_source: no priors");
  const std::size_t n = priors.front().probs.size();

  CognitiveSource source;
  source.probs.assign(n, 0.0);
  Vec compensation(n, 0.0);
  for (const LanguagePrior& lp : priors) {
    if (lp.probs.size() != n) {
      throw std::invalid_argument("average_source: priors have mismatched supports");
    }
    source.language_ids.push_back(lp.language_id);
    for (std::size_t c = 0; c < n; ++c) {
      // Kahan update per chip.
      double y = lp.probs[c] - compensation[c];
      double t = source.probs[c] + y;
      compensation[c] = (t - source.probs[c]) - y;
      source.probs[c] = t;
    }
  }
  const double inv_l = 1.0 / static_cast<double>(priors.size());
  for (double& p : source.probs) p *= inv_l;
  return source;
}

}  // namespace ibcolor
