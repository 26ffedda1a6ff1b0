#pragma once

// Scoring natural languages against the IB limit: beta fitting, the epsilon
// deviation measures, gNID similarity, the complexity-constrained variant
// (C-IB), the frequent-term baseline (RKK+) and k-fold cross-validation.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ibcolor/ib.hpp"
#include "ibcolor/priors.hpp"
#include "ibcolor/wcs.hpp"

namespace ibcolor {

struct LanguageCoords {
  double complexity = 0.0;  // I(M;W), bits
  double accuracy = 0.0;    // I(Y;W), bits
};

LanguageCoords language_coords(const Matrix& cond, const Vec& prior, const MeaningSpace& space,
                               Backend b = kernels::default_backend());

struct LanguageFit {
  double beta = 0.0;
  double delta_f = 0.0;   // F_beta[q_l] - F*_beta at the fitted beta, bits
  double epsilon = 0.0;   // delta_f / beta
  std::size_t point_index = 0;
};

// argmin over the stored grid of (I_l - I*_b) - b (A_l - A*_b); ties resolve
// to the lowest beta. Throws std::invalid_argument on an empty curve.
LanguageFit fit_beta(const LanguageCoords& coords, const IBCurve& curve);

// Generalized NID between two soft clusterings of the same meanings under a
// shared prior: 1 - I(W;V) / max(I(W;W'), I(V;V')). Throws std::domain_error
// when both encoders are non-informative.
double gnid(const Matrix& q1, const Matrix& q2, const Vec& prior);

struct CibFit {
  double beta = 0.0;                // interpolated
  double matched_complexity = 0.0;
  double matched_accuracy = 0.0;
  double epsilon = 0.0;             // accuracy gap A* - A_l, bits
  std::size_t nearer_point = 0;     // grid point whose encoder represents the match
};

// Matches the language's exact complexity on the curve by linear
// interpolation between adjacent grid points. Throws std::out_of_range when
// the complexity lies outside the curve's span.
CibFit fit_beta_constrained(const LanguageCoords& coords, const IBCurve& curve);

struct RkkOptions {
  int restarts = 5;
  int anneal_steps = 24;
  double beta_max = 8192.0;
  double tol = 1e-8;
  int max_iter = 10000;
  double perturbation = 1e-4;
  std::uint64_t seed = 0;
  Backend backend = kernels::default_backend();
};

struct RkkOptimum {
  int term_count = 0;
  double accuracy = 0.0;  // best I(Y;W) over restarts with exactly K words
  Matrix encoder;
  bool ok = true;
};

// Best achievable accuracy with exactly k words: cardinality-capped annealing
// to high beta, best of seeded restarts. Cached per k by the callers.
RkkOptimum rkk_capped_optimum(int k, const Vec& prior, const MeaningSpace& space,
                              const RkkOptions& options);

struct RkkScore {
  int term_count = 0;
  double log2_k = 0.0;    // reported complexity
  double best_accuracy = 0.0;
  double epsilon = 0.0;   // best_accuracy - A_l, bits
  bool ok = true;
};

RkkScore rkk_plus_eval(const LanguageEncoder& language, const LanguageCoords& coords,
                       const Vec& prior, const MeaningSpace& space, const RkkOptions& options,
                       std::map<int, RkkOptimum>* cache = nullptr);

struct PerLanguageEval {
  int language_id = 0;
  int n_terms = 0;
  int frequent_terms = 0;
  LanguageCoords coords;
  LanguageFit ib;
  double gnid_ib = 0.0;
  CibFit cib;
  double gnid_cib = 0.0;
  RkkScore rkk;
  double gnid_rkk = 0.0;
  bool flagged = false;       // any component failed; excluded from means
  std::string flag_reason;
};

PerLanguageEval evaluate_language(const LanguageEncoder& language, const Vec& prior,
                                  const MeaningSpace& space, const IBCurve& curve,
                                  const EncoderStore& store, const RkkOptions& rkk_options,
                                  std::map<int, RkkOptimum>* rkk_cache = nullptr,
                                  Backend b = kernels::default_backend());

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
};

struct PrincipleStats {
  Stats eps_ib, gnid_ib, eps_cib, gnid_cib, eps_rkk, gnid_rkk;
};

PrincipleStats pooled_stats(const std::vector<PerLanguageEval>& evals);

struct FoldResult {
  int fold = 0;
  std::vector<int> held_out_ids;
  std::vector<PerLanguageEval> evals;
};

struct CrossValReport {
  std::vector<FoldResult> folds;
  PrincipleStats pooled;
  int flagged_count = 0;
};

// Builds a curve for a fold's cognitive source; the returned store holds the
// curve's encoders (memory-backed for tests, file-backed in the pipeline).
struct BuiltCurve {
  IBCurve curve;
  std::unique_ptr<EncoderStore> store;
};
using CurveBuilder = std::function<BuiltCurve(const Vec& fold_prior, const std::string& tag)>;

struct CrossValOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  RkkOptions rkk;
  Backend backend = kernels::default_backend();
};

// Deterministic seeded round-robin fold assignment over languages sorted by
// id. folds == 1 is the degenerate mode: train on all, evaluate all.
std::vector<std::vector<int>> fold_assignment(std::vector<int> language_ids, int folds,
                                              std::uint64_t seed);

CrossValReport cross_validate(const std::vector<LanguageEncoder>& languages,
                              const std::vector<LanguagePrior>& priors, const MeaningSpace& space,
                              const CrossValOptions& options, const CurveBuilder& build_curve);

}  // namespace ibcolor
