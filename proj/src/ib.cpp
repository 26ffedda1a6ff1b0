#include "ibcolor/ib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ibcolor/info.hpp"
#include "ibcolor/rng.hpp"

namespace ibcolor {

namespace {

Vec log_with_sentinel(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] > 0.0 ? std::log(v[i]) : kernels::kLogZeroSentinel;
  }
  return out;
}

int effective_k_impl(const Matrix& decoder_rows, const Vec& marginal, double merge_tol) {
  std::vector<std::size_t> reps;
  for (std::size_t w = 0; w < decoder_rows.rows(); ++w) {
    if (marginal[w] < 1e-9) continue;
    bool merged = false;
    for (std::size_t r : reps) {
      double tv = 0.0;
      const double* a = decoder_rows.row(w).data();
      const double* b = decoder_rows.row(r).data();
      for (std::size_t y = 0; y < decoder_rows.cols(); ++y) tv += std::abs(a[y] - b[y]);
      if (0.5 * tv < merge_tol) {
        merged = true;
        break;
      }
    }
    if (!merged) reps.push_back(w);
  }
  return static_cast<int>(reps.size());
}

struct ObjectiveParts {
  double complexity = 0.0;
  double accuracy = 0.0;
};

ObjectiveParts objective_parts(const Vec& prior, const Matrix& cond,
                               const kernels::DecoderData& dec, const Matrix& log_dec,
                               const Vec& log_env, Backend b) {
  ObjectiveParts parts;
  parts.complexity = kernels::complexity_bits(prior, cond, dec.word_marginal, b);
  parts.accuracy = kernels::accuracy_bits(dec.word_marginal, dec.rows, log_dec, log_env, dec.live, b);
  return parts;
}

}  // namespace

Encoder make_encoder(Matrix cond, const Vec& prior) {
  if (cond.rows() != prior.size()) {
    throw std::invalid_argument("make_encoder: prior size does not match encoder rows");
  }
  if (cond.cols() == 0) throw std::invalid_argument("make_encoder: encoder has no words");
  normalize_rows(cond);
  Encoder enc;
  enc.word_marginal = kernels::word_marginal(prior, cond);
  enc.cond = std::move(cond);
  return enc;
}

Decoder bayesian_decoder(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                         Backend b) {
  auto data = kernels::decoder(prior, encoder.cond, space.rows, b);
  return Decoder{std::move(data.rows), std::move(data.live)};
}

Vec environment_marginal(const Vec& prior, const MeaningSpace& space) {
  if (prior.size() != space.rows.rows()) {
    throw std::invalid_argument("environment_marginal: prior does not match space");
  }
  Vec p0(space.rows.cols(), 0.0);
  for (std::size_t m = 0; m < prior.size(); ++m) {
    if (prior[m] == 0.0) continue;
    axpy(p0.data(), prior[m], space.rows.row(m).data(), p0.size());
  }
  return p0;
}

double meaning_mi_bits(const Vec& prior, const MeaningSpace& space) {
  Matrix joint(space.rows.rows(), space.rows.cols());
  for (std::size_t m = 0; m < space.rows.rows(); ++m) {
    const double* src = space.rows.row(m).data();
    double* dst = joint.row(m).data();
    for (std::size_t y = 0; y < space.rows.cols(); ++y) dst[y] = prior[m] * src[y];
  }
  return mutual_information_bits(joint);
}

IBPoint ib_objective(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                     double beta, Backend b) {
  if (!(beta >= 0.0)) throw std::invalid_argument("ib_objective: beta must be nonnegative");
  if (encoder.cond.rows() != space.rows.rows()) {
    throw std::invalid_argument("ib_objective: encoder does not match space");
  }
  auto dec = kernels::decoder(prior, encoder.cond, space.rows, b);
  Matrix log_dec = kernels::log_rows(dec.rows, dec.live, b);
  Vec log_env = log_with_sentinel(environment_marginal(prior, space));
  auto parts = objective_parts(prior, encoder.cond, dec, log_dec, log_env, b);

  IBPoint point;
  point.beta = beta;
  point.complexity = parts.complexity;
  point.accuracy = parts.accuracy;
  point.free_energy = parts.complexity - beta * parts.accuracy;
  point.effective_k = effective_k_impl(dec.rows, dec.word_marginal, 1e-3);
  return point;
}

Encoder fixed_point_step(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                         double beta, Backend b) {
  if (!(beta >= 0.0)) throw std::invalid_argument("fixed_point_step: beta must be nonnegative");
  auto dec = kernels::decoder(prior, encoder.cond, space.rows, b);
  Matrix log_dec = kernels::log_rows(dec.rows, dec.live, b);
  Vec neg_entropy = kernels::row_neg_entropy_nats(space.rows, b);
  Matrix div = kernels::divergence_nats(space.rows, neg_entropy, log_dec, dec.live, b);
  Vec log_marginal = log_with_sentinel(dec.word_marginal);
  Matrix next = kernels::encoder_update(log_marginal, div, beta, dec.live, b);
  return make_encoder(std::move(next), prior);
}

SolveResult solve_ib(const Vec& prior, const MeaningSpace& space, double beta, const Encoder& init,
                     double tol, int max_iter, Backend b) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_ib: tol must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("solve_ib: beta must be nonnegative");
  if (init.cond.rows() != space.rows.rows()) {
    throw std::invalid_argument("solve_ib: encoder does not match space");
  }

  const Vec neg_entropy = kernels::row_neg_entropy_nats(space.rows, b);
  const Vec log_env = log_with_sentinel(environment_marginal(prior, space));

  Matrix cond = init.cond;
  auto dec = kernels::decoder(prior, cond, space.rows, b);
  Matrix log_dec = kernels::log_rows(dec.rows, dec.live, b);
  auto parts = objective_parts(prior, cond, dec, log_dec, log_env, b);
  double f_prev = parts.complexity - beta * parts.accuracy;

  SolveResult result;
  result.delta_f = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    Matrix div = kernels::divergence_nats(space.rows, neg_entropy, log_dec, dec.live, b);
    Vec log_marginal = log_with_sentinel(dec.word_marginal);
    cond = kernels::encoder_update(log_marginal, div, beta, dec.live, b);
    dec = kernels::decoder(prior, cond, space.rows, b);
    log_dec = kernels::log_rows(dec.rows, dec.live, b);
    parts = objective_parts(prior, cond, dec, log_dec, log_env, b);

    double f = parts.complexity - beta * parts.accuracy;
    result.delta_f = std::abs(f - f_prev);
    result.iterations = it;
    f_prev = f;
    if (result.delta_f < tol) {
      result.converged = true;
      break;
    }
  }

  result.encoder = Encoder{cond, dec.word_marginal};
  result.decoder = Decoder{dec.rows, dec.live};
  result.point.beta = beta;
  result.point.complexity = parts.complexity;
  result.point.accuracy = parts.accuracy;
  result.point.free_energy = parts.complexity - beta * parts.accuracy;
  result.point.converged = result.converged;
  result.point.iterations = result.iterations;
  return result;
}

int effective_lexicon_size(const Encoder& encoder, const Vec& prior, const MeaningSpace& space,
                           double merge_tol, Backend b) {
  auto dec = kernels::decoder(prior, encoder.cond, space.rows, b);
  return effective_k_impl(dec.rows, dec.word_marginal, merge_tol);
}

Matrix perturb_rows(const Matrix& cond, double magnitude, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix out(cond.rows(), cond.cols());
  for (std::size_t r = 0; r < cond.rows(); ++r) {
    const double* src = cond.row(r).data();
    double* dst = out.row(r).data();
    for (std::size_t c = 0; c < cond.cols(); ++c) {
      dst[c] = src[c] * (1.0 + magnitude * rng.uniform());
    }
  }
  normalize_rows(out);
  return out;
}

double IBCurve::max_complexity() const {
  double m = 0.0;
  for (const IBPoint& p : points) m = std::max(m, p.complexity);
  return m;
}

std::vector<Transition> IBCurve::transitions() const {
  std::vector<Transition> out;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].effective_k > points[i - 1].effective_k) {
      out.push_back({points[i].beta, points[i - 1].effective_k, points[i].effective_k});
    }
  }
  return out;
}

std::vector<double> geometric_schedule(double beta_min, double beta_max, int steps) {
  if (!(beta_min > 0.0) || !(beta_max >= beta_min)) {
    throw std::invalid_argument("geometric_schedule: need 0 < beta_min <= beta_max");
  }
  if (steps <= 1) return {beta_min};
  std::vector<double> schedule(static_cast<std::size_t>(steps));
  double ratio = std::pow(beta_max / beta_min, 1.0 / (steps - 1));
  double beta = beta_min;
  for (int i = 0; i < steps; ++i) {
    schedule[static_cast<std::size_t>(i)] = beta;
    beta *= ratio;
  }
  schedule.back() = beta_max;
  return schedule;
}

IBCurve anneal_curve(const Vec& prior, const MeaningSpace& space,
                     const std::vector<double>& schedule, const AnnealOptions& options,
                     EncoderStore* store) {
  if (schedule.empty()) throw std::invalid_argument("anneal_curve: empty schedule");
  if (schedule.front() > 1.0) {
    throw std::invalid_argument("anneal_curve: schedule must start at beta <= 1");
  }
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] >= 0.0)) throw std::invalid_argument("anneal_curve: negative beta");
    if (i > 0 && schedule[i] < schedule[i - 1]) {
      throw std::invalid_argument("anneal_curve: schedule must be ascending");
    }
  }

  const std::size_t n_m = space.rows.rows();
  const std::size_t k = options.k_max == 0 ? n_m : options.k_max;
  const std::size_t n_points = schedule.size();

  Matrix cond;
  if (options.init != nullptr) {
    cond = *options.init;
    if (cond.rows() != n_m || cond.cols() != k) {
      throw std::invalid_argument("anneal_curve: init encoder has wrong shape");
    }
  } else if (!options.reverse) {
    cond = Matrix(n_m, k, 1.0 / static_cast<double>(k));
  } else {
    // High-beta start: one word per meaning (folded when k < n_m).
    cond = Matrix(n_m, k, 0.0);
    for (std::size_t m = 0; m < n_m; ++m) cond(m, m % k) = 1.0;
  }

  IBCurve curve;
  curve.points.resize(n_points);
  curve.meta.sigma_sq = space.sigma_sq;
  curve.meta.beta_min = schedule.front();
  curve.meta.beta_max = schedule.back();
  curve.meta.beta_steps = static_cast<int>(n_points);
  curve.meta.tol = options.tol;
  curve.meta.max_iter = options.max_iter;
  curve.meta.perturbation = options.perturbation;
  curve.meta.merge_tol = options.merge_tol;
  curve.meta.seed = options.seed;
  curve.meta.mode = options.reverse ? "reverse" : "forward";

  for (std::size_t j = 0; j < n_points; ++j) {
    const std::size_t i = options.reverse ? n_points - 1 - j : j;
    std::uint64_t point_seed =
        derive_seed(options.seed, options.reverse ? "anneal-rev" : "anneal-fwd", i);
    Matrix start = perturb_rows(cond, options.perturbation, point_seed);
    SolveResult res = solve_ib(prior, space, schedule[i], make_encoder(std::move(start), prior),
                               options.tol, options.max_iter, options.backend);

    IBPoint point = res.point;
    point.effective_k =
        effective_k_impl(res.decoder.rows, res.encoder.word_marginal, options.merge_tol);
    point.encoder_id = store != nullptr ? store->put(res.encoder.cond) : -1;
    curve.points[i] = point;
    if (options.on_point) options.on_point(i, point);
    cond = std::move(res.encoder.cond);
  }
  return curve;
}

IBCurve merge_curves(const IBCurve& a, const IBCurve& b, const EncoderStore* store_a,
                     const EncoderStore* store_b, EncoderStore* out_store) {
  if (a.points.size() != b.points.size()) {
    throw std::invalid_argument("merge_curves: point counts differ");
  }
  IBCurve out;
  out.meta = a.meta;
  out.meta.mode = a.meta.mode + "+" + b.meta.mode;
  out.points.resize(a.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const IBPoint& pa = a.points[i];
    const IBPoint& pb = b.points[i];
    if (pa.beta != pb.beta) throw std::invalid_argument("merge_curves: schedules differ");
    bool pick_a;
    if (pa.converged != pb.converged) {
      pick_a = pa.converged;
    } else {
      pick_a = pa.free_energy <= pb.free_energy;
    }
    IBPoint point = pick_a ? pa : pb;
    const EncoderStore* src = pick_a ? store_a : store_b;
    if (out_store != nullptr && src != nullptr && point.encoder_id >= 0) {
      point.encoder_id = out_store->put(src->get(point.encoder_id));
    } else {
      point.encoder_id = -1;
    }
    out.points[i] = point;
  }
  return out;
}

IBCurve anneal_with_reverse_refinement(const Vec& prior, const MeaningSpace& space,
                                       const std::vector<double>& schedule,
                                       const AnnealOptions& options, EncoderStore* store) {
  MemoryEncoderStore fwd_store, rev_store;
  AnnealOptions fwd = options;
  fwd.reverse = false;
  fwd.init = nullptr;
  IBCurve forward = anneal_curve(prior, space, schedule, fwd, &fwd_store);

  // The reverse sweep starts from the one-word-per-meaning limit, so the top
  // of the curve cannot inherit merges the forward chain failed to split.
  AnnealOptions rev = options;
  rev.reverse = true;
  rev.init = nullptr;
  IBCurve reverse = anneal_curve(prior, space, schedule, rev, &rev_store);

  return merge_curves(forward, reverse, &fwd_store, &rev_store, store);
}

}  // namespace ibcolor
