#include "ibcolor/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ibcolor/info.hpp"
#include "ibcolor/rng.hpp"

namespace ibcolor {

LanguageCoords language_coords(const Matrix& cond, const Vec& prior, const MeaningSpace& space,
                               Backend b) {
  auto dec = kernels::decoder(prior, cond, space.rows, b);
  Matrix log_dec = kernels::log_rows(dec.rows, dec.live, b);
  Vec p0 = environment_marginal(prior, space);
  Vec log_env(p0.size());
  for (std::size_t y = 0; y < p0.size(); ++y) {
    log_env[y] = p0[y] > 0.0 ? std::log(p0[y]) : kernels::kLogZeroSentinel;
  }
  LanguageCoords coords;
  coords.complexity = kernels::complexity_bits(prior, cond, dec.word_marginal, b);
  coords.accuracy = kernels::accuracy_bits(dec.word_marginal, dec.rows, log_dec, log_env, dec.live, b);
  return coords;
}

LanguageFit fit_beta(const LanguageCoords& coords, const IBCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("fit_beta: empty curve");
  LanguageFit fit;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const IBPoint& p = curve.points[i];
    double df = (coords.complexity - p.complexity) - p.beta * (coords.accuracy - p.accuracy);
    if (df < best) {  // strict: ties keep the lowest beta
      best = df;
      fit.point_index = i;
    }
  }
  const IBPoint& p = curve.points[fit.point_index];
  fit.beta = p.beta;
  fit.delta_f = best;
  fit.epsilon = p.beta > 0.0 ? best / p.beta : best;
  return fit;
}

namespace {

// p(w,v) = sum_m p(m) q1(w|m) q2(v|m), skipping zero encoder entries.
Matrix coupled_joint(const Matrix& q1, const Matrix& q2, const Vec& prior) {
  Matrix joint(q1.cols(), q2.cols(), 0.0);
  for (std::size_t m = 0; m < q1.rows(); ++m) {
    if (prior[m] == 0.0) continue;
    const double* r1 = q1.row(m).data();
    const double* r2 = q2.row(m).data();
    for (std::size_t w = 0; w < q1.cols(); ++w) {
      double u = prior[m] * r1[w];
      if (u == 0.0) continue;
      axpy(joint.row(w).data(), u, r2, q2.cols());
    }
  }
  return joint;
}

}  // namespace

double gnid(const Matrix& q1, const Matrix& q2, const Vec& prior) {
  if (q1.rows() != q2.rows() || q1.rows() != prior.size()) {
    throw std::invalid_argument("gnid: encoders must share the meaning support");
  }
  double i_wv = mutual_information_bits(coupled_joint(q1, q2, prior));
  double i_ww = mutual_information_bits(coupled_joint(q1, q1, prior));
  double i_vv = mutual_information_bits(coupled_joint(q2, q2, prior));
  double denom = std::max(i_ww, i_vv);
  if (denom <= 0.0) {
    throw std::domain_error("gnid: undefined for two non-informative encoders");
  }
  return 1.0 - i_wv / denom;
}

CibFit fit_beta_constrained(const LanguageCoords& coords, const IBCurve& curve) {
  if (curve.points.empty()) throw std::invalid_argument("fit_beta_constrained: empty curve");
  const auto& pts = curve.points;
  const double target = coords.complexity;
  constexpr double kEdgeSlack = 1e-9;

  double lo = pts.front().complexity;
  double hi = pts.back().complexity;
  if (target < lo - kEdgeSlack || target > hi + kEdgeSlack) {
    throw std::out_of_range("fit_beta_constrained: language complexity outside the curve range");
  }

  CibFit fit;
  if (target <= lo) {
    fit.beta = pts.front().beta;
    fit.matched_complexity = lo;
    fit.matched_accuracy = pts.front().accuracy;
    fit.nearer_point = 0;
  } else {
    // First grid point at or above the target; complexity is nondecreasing
    // along the curve up to solver noise.
    std::size_t j = pts.size() - 1;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].complexity >= target) {
        j = i;
        break;
      }
    }
    const IBPoint& a = pts[j - 1];
    const IBPoint& b = pts[j];
    double span = b.complexity - a.complexity;
    double t = span > 0.0 ? (target - a.complexity) / span : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    fit.beta = a.beta + t * (b.beta - a.beta);
    fit.matched_complexity = a.complexity + t * span;
    fit.matched_accuracy = a.accuracy + t * (b.accuracy - a.accuracy);
    fit.nearer_point = t < 0.5 ? j - 1 : j;
  }
  fit.epsilon = fit.matched_accuracy - coords.accuracy;
  return fit;
}

RkkOptimum rkk_capped_optimum(int k, const Vec& prior, const MeaningSpace& space,
                              const RkkOptions& options) {
  if (k < 1) throw std::invalid_argument("rkk_capped_optimum: need at least one word");
  RkkOptimum best;
  best.term_count = k;
  if (k == 1) {
    best.accuracy = 0.0;
    best.encoder = Matrix(space.rows.rows(), 1, 1.0);
    return best;
  }

  std::vector<double> schedule = geometric_schedule(1.0, options.beta_max, options.anneal_steps);
  best.accuracy = -1.0;
  best.ok = false;
  for (int r = 0; r < options.restarts; ++r) {
    AnnealOptions anneal;
    anneal.k_max = static_cast<std::size_t>(k);
    anneal.tol = options.tol;
    anneal.max_iter = options.max_iter;
    anneal.perturbation = options.perturbation;
    anneal.seed = derive_seed(options.seed, "rkk-restart", static_cast<std::uint64_t>(k) * 1000 + r);
    anneal.backend = options.backend;
    MemoryEncoderStore store;
    IBCurve curve = anneal_curve(prior, space, schedule, anneal, &store);
    const IBPoint& top = curve.points.back();
    if (!top.converged) continue;
    if (top.accuracy > best.accuracy) {
      best.accuracy = top.accuracy;
      best.encoder = store.get(top.encoder_id);
      best.ok = true;
    }
  }
  if (!best.ok) best.accuracy = 0.0;
  return best;
}

RkkScore rkk_plus_eval(const LanguageEncoder& language, const LanguageCoords& coords,
                       const Vec& prior, const MeaningSpace& space, const RkkOptions& options,
                       std::map<int, RkkOptimum>* cache) {
  RkkScore score;
  score.term_count = frequent_term_count(language);
  score.log2_k = std::log2(static_cast<double>(score.term_count));

  const RkkOptimum* opt = nullptr;
  RkkOptimum local;
  if (cache != nullptr) {
    auto it = cache->find(score.term_count);
    if (it == cache->end()) {
      it = cache->emplace(score.term_count,
                          rkk_capped_optimum(score.term_count, prior, space, options))
               .first;
    }
    opt = &it->second;
  } else {
    local = rkk_capped_optimum(score.term_count, prior, space, options);
    opt = &local;
  }
  score.ok = opt->ok;
  score.best_accuracy = opt->accuracy;
  score.epsilon = opt->accuracy - coords.accuracy;
  return score;
}

PerLanguageEval evaluate_language(const LanguageEncoder& language, const Vec& prior,
                                  const MeaningSpace& space, const IBCurve& curve,
                                  const EncoderStore& store, const RkkOptions& rkk_options,
                                  std::map<int, RkkOptimum>* rkk_cache, Backend b) {
  PerLanguageEval out;
  out.language_id = language.language_id;
  out.n_terms = static_cast<int>(language.terms.size());
  out.frequent_terms = frequent_term_count(language);
  out.coords = language_coords(language.cond, prior, space, b);

  try {
    out.ib = fit_beta(out.coords, curve);
    Matrix matched = store.get(curve.points[out.ib.point_index].encoder_id);
    out.gnid_ib = gnid(language.cond, matched, prior);

    out.cib = fit_beta_constrained(out.coords, curve);
    Matrix near = store.get(curve.points[out.cib.nearer_point].encoder_id);
    out.gnid_cib = gnid(language.cond, near, prior);

    out.rkk = rkk_plus_eval(language, out.coords, prior, space, rkk_options, rkk_cache);
    if (!out.rkk.ok) {
      out.flagged = true;
      out.flag_reason = "rkk solver failed";
    }
    if (rkk_cache != nullptr) {
      out.gnid_rkk = gnid(language.cond, rkk_cache->at(out.rkk.term_count).encoder, prior);
    } else {
      RkkOptimum opt = rkk_capped_optimum(out.rkk.term_count, prior, space, rkk_options);
      out.gnid_rkk = gnid(language.cond, opt.encoder, prior);
    }
  } catch (const std::exception& e) {
    out.flagged = true;
    out.flag_reason = e.what();
  }
  return out;
}

namespace {

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double total = 0.0;
  for (double x : xs) total += x;
  s.mean = total / xs.size();
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / (xs.size() - 1));
  }
  return s;
}

}  // namespace

PrincipleStats pooled_stats(const std::vector<PerLanguageEval>& evals) {
  std::vector<double> eps_ib, gn_ib, eps_cib, gn_cib, eps_rkk, gn_rkk;
  for (const PerLanguageEval& e : evals) {
    if (e.flagged) continue;
    eps_ib.push_back(e.ib.epsilon);
    gn_ib.push_back(e.gnid_ib);
    eps_cib.push_back(e.cib.epsilon);
    gn_cib.push_back(e.gnid_cib);
    eps_rkk.push_back(e.rkk.epsilon);
    gn_rkk.push_back(e.gnid_rkk);
  }
  PrincipleStats out;
  out.eps_ib = stats_of(eps_ib);
  out.gnid_ib = stats_of(gn_ib);
  out.eps_cib = stats_of(eps_cib);
  out.gnid_cib = stats_of(gn_cib);
  out.eps_rkk = stats_of(eps_rkk);
  out.gnid_rkk = stats_of(gn_rkk);
  return out;
}

std::vector<std::vector<int>> fold_assignment(std::vector<int> language_ids, int folds,
                                              std::uint64_t seed) {
  if (folds < 1) throw std::invalid_argument("fold_assignment: folds must be positive");
  if (static_cast<int>(language_ids.size()) < folds) {
    throw std::invalid_argument("fold_assignment: fewer languages than folds");
  }
  std::sort(language_ids.begin(), language_ids.end());
  SplitMix64 rng(derive_seed(seed, "fold-shuffle"));
  for (std::size_t i = language_ids.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(language_ids[i - 1], language_ids[j]);
  }
  std::vector<std::vector<int>> assignment(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < language_ids.size(); ++i) {
    assignment[i % static_cast<std::size_t>(folds)].push_back(language_ids[i]);
  }
  for (auto& fold : assignment) std::sort(fold.begin(), fold.end());
  return assignment;
}

CrossValReport cross_validate(const std::vector<LanguageEncoder>& languages,
                              const std::vector<LanguagePrior>& priors, const MeaningSpace& space,
                              const CrossValOptions& options, const CurveBuilder& build_curve) {
  if (languages.size() != priors.size()) {
    throw std::invalid_argument("cross_validate: languages and priors must align");
  }
  std::map<int, const LanguageEncoder*> by_id;
  std::vector<int> ids;
  for (const auto& l : languages) {
    by_id[l.language_id] = &l;
    ids.push_back(l.language_id);
  }

  auto assignment = fold_assignment(ids, options.folds, options.seed);

  CrossValReport report;
  std::vector<PerLanguageEval> pooled;
  for (std::size_t f = 0; f < assignment.size(); ++f) {
    FoldResult fold;
    fold.fold = static_cast<int>(f);
    fold.held_out_ids = assignment[f];

    // Degenerate single-fold mode trains on everything.
    std::vector<LanguagePrior> training;
    for (const auto& p : priors) {
      bool held_out = std::binary_search(fold.held_out_ids.begin(), fold.held_out_ids.end(),
                                         p.language_id);
      if (options.folds == 1 || !held_out) training.push_back(p);
    }
    CognitiveSource source = average_source(training);

    BuiltCurve built = build_curve(source.probs, "fold" + std::to_string(f));

    std::map<int, RkkOptimum> rkk_cache;
    RkkOptions rkk = options.rkk;
    rkk.seed = derive_seed(options.seed, "rkk-fold", f);
    for (int id : fold.held_out_ids) {
      PerLanguageEval e = evaluate_language(*by_id.at(id), source.probs, space, built.curve,
                                            *built.store, rkk, &rkk_cache, options.backend);
      if (e.flagged) ++report.flagged_count;
      fold.evals.push_back(e);
      pooled.push_back(std::move(e));
    }
    report.folds.push_back(std::move(fold));
  }
  report.pooled = pooled_stats(pooled);
  return report;
}

}  // namespace ibcolor
