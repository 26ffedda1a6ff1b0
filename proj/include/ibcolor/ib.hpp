#pragma once

// The IB solver. Conventions:
//   - meanings index rows, words index columns: encoder is N x K with rows
//     q(w|m); the decoder is K x N with rows m_hat_w(y).
//   - complexity I(M;W), accuracy I(Y;W) and free energy
//     F_beta = complexity - beta * accuracy are reported in bits; the
//     fixed-point exponent exp(-beta * D[m_m || m_hat_w]) uses nats.
//     The choice is recorded in persisted metadata.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ibcolor/kernels.hpp"
#include "ibcolor/matrix.hpp"
#include "ibcolor/meaning_space.hpp"

namespace ibcolor {

using kernels::Backend;

struct Encoder {
  Matrix cond;        // N x K, rows q(w|m)
  Vec word_marginal;  // K, consistent with the prior it was built against
};

Encoder make_encoder(Matrix cond, const Vec& prior);

struct undefined_word_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Decoder {
  Matrix rows;  // K x N
  std::vector<std::uint8_t> live;

  // Throws undefined_word_error for words with zero marginal.
  std::span<const double> row(std::size_t w) const {
    if (!live[w]) throw undefined_word_error("decoder row requested for word with zero marginal");
    return rows.row(w);
  }
};

Decoder bayesian_decoder(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                         Backend b = kernels::default_backend());

struct IBPoint {
  double beta = 0.0;
  double complexity = 0.0;   // I(M;W), bits
  double accuracy = 0.0;     // I(Y;W), bits
  double free_energy = 0.0;  // complexity - beta * accuracy
  int effective_k = 0;
  std::int64_t encoder_id = -1;
  bool converged = true;
  int iterations = 0;
};

// Environment marginal p0(y) = sum_m p(m) m_m(y).
Vec environment_marginal(const Vec& prior, const MeaningSpace& space);

// I(M;Y) of the meaning space under a prior, in bits.
double meaning_mi_bits(const Vec& prior, const MeaningSpace& space);

IBPoint ib_objective(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                     double beta, Backend b = kernels::default_backend());

// One fixed-point update q'(w|m) ~ q(w) exp(-beta D[m_m || m_hat_w]).
Encoder fixed_point_step(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                         double beta, Backend b = kernels::default_backend());

struct SolveResult {
  Encoder encoder;
  Decoder decoder;
  IBPoint point;
  bool converged = false;
  double delta_f = 0.0;  // last |F_k - F_{k-1}|
  int iterations = 0;
};

// Iterates fixed_point_step until |dF| < tol or max_iter. A run that hits
// max_iter is returned with converged = false and the last iterate intact.
SolveResult solve_ib(const Vec& prior, const MeaningSpace& space, double beta,
                     const Encoder& init, double tol, int max_iter,
                     Backend b = kernels::default_backend());

// Words with marginal below 1e-9 are dropped; remaining words are merged when
// their decoder rows are within merge_tol in total variation.
int effective_lexicon_size(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                           double merge_tol, Backend b = kernels::default_backend());

struct AnnealOptions {
  std::size_t k_max = 0;          // 0 means one word per meaning
  double tol = 1e-8;
  int max_iter = 10000;
  double perturbation = 1e-4;     // symmetry-breaking noise applied per point
  std::uint64_t seed = 0;
  bool reverse = false;           // anneal from high beta downward
  double merge_tol = 1e-3;        // effective_k merge tolerance
  Backend backend = kernels::default_backend();
  const Matrix* init = nullptr;   // optional warm start for the first point
  std::function<void(std::size_t index, const IBPoint&)> on_point;  // progress
};

// Stores converged encoders during annealing; the file-backed implementation
// lives in io.hpp, the in-memory one below suffices for tests.
class EncoderStore {
 public:
  virtual ~EncoderStore() = default;
  virtual std::int64_t put(const Matrix& cond) = 0;
  virtual Matrix get(std::int64_t id) const = 0;
  virtual std::size_t count() const = 0;
};

class MemoryEncoderStore final : public EncoderStore {
 public:
  std::int64_t put(const Matrix& cond) override {
    items_.push_back(cond);
    return static_cast<std::int64_t>(items_.size()) - 1;
  }
  Matrix get(std::int64_t id) const override { return items_.at(static_cast<std::size_t>(id)); }
  std::size_t count() const override { return items_.size(); }

 private:
  std::vector<Matrix> items_;
};

struct CurveMeta {
  double sigma_sq = 0.0;
  double beta_min = 0.0, beta_max = 0.0;
  int beta_steps = 0;
  double tol = 0.0;
  int max_iter = 0;
  double perturbation = 0.0;
  double merge_tol = 0.0;
  std::uint64_t seed = 0;
  std::string mode;  // "forward", "reverse" or "forward+reverse"
  std::string space_digest;
  std::string prior_digest;
};

struct Transition {
  double beta = 0.0;
  int from_k = 0;
  int to_k = 0;
};

struct IBCurve {
  std::vector<IBPoint> points;  // ascending beta
  CurveMeta meta;

  double max_complexity() const;
  std::vector<Transition> transitions() const;
};

std::vector<double> geometric_schedule(double beta_min, double beta_max, int steps);

// Deterministic annealing along an ascending schedule (first beta must be
// <= 1). Forward mode warm-starts each point from the previous solution with
// multiplicative symmetry-breaking noise; reverse mode walks the schedule
// downward and the returned points are re-sorted ascending. Solver failures
// flag the point and the sweep continues.
IBCurve anneal_curve(const Vec& prior, const MeaningSpace& space,
                     const std::vector<double>& schedule, const AnnealOptions& options,
                     EncoderStore* store = nullptr);

// Pointwise best of two sweeps over the same schedule (smaller free energy
// wins, converged points beat flagged ones). Winner encoders are copied into
// out_store when all stores are provided.
IBCurve merge_curves(const IBCurve& a, const IBCurve& b, const EncoderStore* store_a,
                     const EncoderStore* store_b, EncoderStore* out_store);

// Forward sweep followed by a reverse refinement sweep started from the top
// of the forward chain, merged pointwise. This is the canonical way curve
// points (and single-beta solutions, via the last point) are produced.
IBCurve anneal_with_reverse_refinement(const Vec& prior, const MeaningSpace& space,
                                       const std::vector<double>& schedule,
                                       const AnnealOptions& options, EncoderStore* store = nullptr);

// Multiplies every entry by (1 + u * magnitude) with u uniform in [0,1) from
// a seeded stream, then renormalizes rows.
Matrix perturb_rows(const Matrix& cond, double magnitude, std::uint64_t seed);

}  // namespace ibcolor
