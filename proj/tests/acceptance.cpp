// Acceptance suite. Runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. The Table-1 reproduction and the
// WCS-channel KKT check need the WCS/English datasets on disk; point
// IBCOLOR_WCS_DIR at a directory containing chip.txt, cnum-vhcm-lab.txt and
// term.txt (and IBCOLOR_ENGLISH_FILE at an English term file) to enable them;
// otherwise they are reported as skipped.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"
#include "ibcolor/evaluation.hpp"
#include "ibcolor/ib.hpp"
#include "ibcolor/info.hpp"
#include "ibcolor/io.hpp"
#include "ibcolor/pipeline.hpp"
#include "ibcolor/priors.hpp"
#include "ibcolor/rng.hpp"

using namespace ibcolor;
namespace fx = ibcolor::testing;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void report(int id, const char* name, bool pass, const std::string& detail, double seconds) {
  std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void report_skip(int id, const char* name, const std::string& reason) {
  std::printf("[SKIP] criterion %d: %s — %s\n", id, name, reason.c_str());
  std::fflush(stdout);
}

std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Independent objective evaluation used by the oracles: joints built
// explicitly and fed to the generic validated MI routine.

double oracle_complexity(const Matrix& cond, const Vec& prior) {
  Matrix joint(cond.rows(), cond.cols());
  for (std::size_t m = 0; m < cond.rows(); ++m) {
    for (std::size_t w = 0; w < cond.cols(); ++w) joint(m, w) = prior[m] * cond(m, w);
  }
  return mutual_information_bits(joint);
}

double oracle_accuracy(const Matrix& cond, const Vec& prior, const MeaningSpace& space) {
  Matrix joint(cond.cols(), space.rows.cols(), 0.0);
  for (std::size_t m = 0; m < cond.rows(); ++m) {
    for (std::size_t w = 0; w < cond.cols(); ++w) {
      double u = prior[m] * cond(m, w);
      if (u == 0.0) continue;
      for (std::size_t y = 0; y < space.rows.cols(); ++y) joint(w, y) += u * space.rows(m, y);
    }
  }
  return mutual_information_bits(joint);
}

double oracle_free_energy(const Matrix& cond, const Vec& prior, const MeaningSpace& space,
                          double beta) {
  return oracle_complexity(cond, prior) - beta * oracle_accuracy(cond, prior, space);
}

// ---------------------------------------------------------------- criterion 1

void criterion_1() {
  Timer timer;
  MeaningSpace space = build_meaning_space(fx::synthetic_subpalette(20), 64.0);
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Vec prior = fx::random_prior(20, 1000 + trial);
    Encoder enc = make_encoder(fx::random_encoder(20, 3 + trial % 8, 2000 + trial), prior);

    IBPoint point = ib_objective(enc, prior, space, 1.0);
    // RHS computed independently: I(M;Y) - E_q[D[M || M_hat]].
    Decoder dec = bayesian_decoder(enc, prior, space);
    double distortion = 0.0;
    for (std::size_t m = 0; m < 20; ++m) {
      for (std::size_t w = 0; w < enc.cond.cols(); ++w) {
        double u = prior[m] * enc.cond(m, w);
        if (u == 0.0) continue;
        Vec meaning(space.rows.row(m).begin(), space.rows.row(m).end());
        Vec decoded(dec.row(w).begin(), dec.row(w).end());
        distortion += u * kl_divergence_bits(meaning, decoded);
      }
    }
    double rhs = meaning_mi_bits(prior, space) - distortion;
    worst = std::max(worst, std::abs(point.accuracy - rhs));
  }
  double elapsed = timer.seconds();
  report(1, "information identity", worst < 1e-9 && elapsed < 5.0,
         "max |I(Y;W) - (I(M;Y) - E[D])| = " + fmt_sci(worst) + " bits over 100 trials", elapsed);
}

// ---------------------------------------------------------------- criterion 2

// All length-4 probability rows on the 0.05 grid.
std::vector<std::array<double, 4>> simplex_grid_rows() {
  std::vector<std::array<double, 4>> rows;
  const int units = 20;
  for (int a = 0; a <= units; ++a) {
    for (int b = 0; a + b <= units; ++b) {
      for (int c = 0; a + b + c <= units; ++c) {
        int d = units - a - b - c;
        rows.push_back({a / 20.0, b / 20.0, c / 20.0, d / 20.0});
      }
    }
  }
  return rows;
}

struct GridOracle {
  double min_f = 0.0;
};

// Exhaustive deterministic enumeration plus multistart coordinate descent
// over the row grid. The full joint grid (1771^4 encoders) is not
// enumerable; descent over single-row exchanges from many starts reaches the
// grid's local minima, and every deterministic encoder is covered exactly.
GridOracle grid_minimum(const MeaningSpace& space, const Vec& prior, double beta,
                        const std::vector<std::array<double, 4>>& grid_rows, std::uint64_t seed) {
  auto f_of = [&](const Matrix& cond) { return oracle_free_energy(cond, prior, space, beta); };

  double best_f = std::numeric_limits<double>::infinity();
  Matrix best_enc;
  auto consider = [&](const Matrix& cond) {
    double f = f_of(cond);
    if (f < best_f) {
      best_f = f;
      best_enc = cond;
    }
  };

  // Deterministic encoders: 4^4.
  Matrix cond(4, 4, 0.0);
  for (int code = 0; code < 256; ++code) {
    for (std::size_t m = 0; m < 4; ++m) {
      for (std::size_t w = 0; w < 4; ++w) cond(m, w) = 0.0;
      cond(m, static_cast<std::size_t>((code >> (2 * m)) & 3)) = 1.0;
    }
    consider(cond);
  }

  // Seeded random grid encoders as extra descent starts.
  SplitMix64 rng(seed);
  std::vector<Matrix> starts;
  starts.push_back(best_enc);
  for (int s = 0; s < 11; ++s) {
    Matrix m(4, 4);
    for (std::size_t r = 0; r < 4; ++r) {
      const auto& row = grid_rows[rng.below(grid_rows.size())];
      for (std::size_t w = 0; w < 4; ++w) m(r, w) = row[w];
    }
    consider(m);
    starts.push_back(m);
  }

  // Coordinate descent on the grid: replace one row at a time by the best
  // grid row until no replacement improves.
  for (Matrix current : starts) {
    double current_f = f_of(current);
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t m = 0; m < 4; ++m) {
        std::array<double, 4> incumbent{current(m, 0), current(m, 1), current(m, 2),
                                        current(m, 3)};
        double row_best = current_f;
        std::array<double, 4> row_arg = incumbent;
        for (const auto& row : grid_rows) {
          for (std::size_t w = 0; w < 4; ++w) current(m, w) = row[w];
          double f = f_of(current);
          if (f < row_best - 1e-15) {
            row_best = f;
            row_arg = row;
          }
        }
        for (std::size_t w = 0; w < 4; ++w) current(m, w) = row_arg[w];
        if (row_best < current_f - 1e-15) {
          current_f = row_best;
          improved = true;
        }
      }
    }
    if (current_f < best_f) best_f = current_f;
  }
  return {best_f};
}

void criterion_2() {
  Timer timer;
  auto grid_rows = simplex_grid_rows();
  double worst_gap = -std::numeric_limits<double>::infinity();
  bool pass = true;
  for (int instance = 0; instance < 10; ++instance) {
    SplitMix64 rng(500 + static_cast<std::uint64_t>(instance));
    std::vector<Lab> labs;
    for (int i = 0; i < 4; ++i) {
      labs.push_back({20.0 + 60.0 * rng.uniform(), 80.0 * rng.uniform() - 40.0,
                      80.0 * rng.uniform() - 40.0});
    }
    MeaningSpace space = build_meaning_space(fx::toy_palette(labs), 64.0);
    Vec prior = fx::random_prior(4, 600 + static_cast<std::uint64_t>(instance));

    for (double beta : {1.5, 3.0, 10.0}) {
      AnnealOptions options;
      options.tol = 1e-10;
      options.max_iter = 20000;
      options.seed = 700 + static_cast<std::uint64_t>(instance);
      // Canonical solve path: forward anneal to beta plus reverse refinement.
      IBCurve chain = anneal_with_reverse_refinement(
          prior, space, geometric_schedule(1.0, beta, 12), options, nullptr);
      double solver_f = chain.points.back().free_energy;

      GridOracle oracle = grid_minimum(space, prior, beta, grid_rows,
                                       800 + static_cast<std::uint64_t>(instance));
      double gap = solver_f - oracle.min_f;
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-3) pass = false;
    }
  }
  double elapsed = timer.seconds();
  report(2, "solver optimality at desk scale", pass && elapsed < 120.0,
         "max (solver F - grid oracle F) = " + fmt_sci(worst_gap) + " over 10 instances x 3 betas",
         elapsed);
}

// ------------------------------------------------------- criteria 3 and 4

struct FullCurveResult {
  IBCurve curve;
  Vec prior;
  double h_m = 0.0;
  bool ok = false;
};

FullCurveResult g_full;

void criterion_3() {
  Timer timer;
  Palette palette = fx::synthetic_palette();
  MeaningSpace space = build_meaning_space(palette, 64.0);
  const std::size_t n = space.size();
  Vec prior(n, 1.0 / static_cast<double>(n));

  // Sub-critical solves.
  double i_low = 0.0;
  for (double beta : {0.5, 1.0}) {
    Encoder init = make_encoder(
        perturb_rows(Matrix(n, n, 1.0 / static_cast<double>(n)), 1e-4,
                     derive_seed(42, "regime", static_cast<std::uint64_t>(beta * 10))),
        prior);
    SolveResult res = solve_ib(prior, space, beta, init, 1e-12, 20000);
    i_low = std::max(i_low, res.point.complexity);
  }

  // Full annealed curve (shared with criterion 4).
  AnnealOptions options;
  options.tol = 1e-9;
  options.max_iter = 10000;
  options.seed = 42;
  MemoryEncoderStore store;
  g_full.curve = anneal_with_reverse_refinement(prior, space,
                                                geometric_schedule(1.0, 8192.0, 100), options,
                                                &store);
  g_full.prior = prior;
  g_full.h_m = entropy_bits(prior);
  g_full.ok = true;

  double top = g_full.curve.points.back().complexity;
  bool top_ok = top >= 0.98 * g_full.curve.max_complexity() && top >= 0.98 * g_full.h_m;
  double elapsed = timer.seconds();
  report(3, "regime limits on the full 330-chip space",
         i_low <= 1e-6 && top_ok && elapsed < 600.0,
         "I(M;W) at beta<=1: " + fmt_sci(i_low) + " bits; complexity at 2^13: " + fmt_sci(top) +
             " of H(M)=" + fmt_sci(g_full.h_m),
         elapsed);
}

void criterion_4() {
  Timer timer;
  if (!g_full.ok) {
    report(4, "monotone annealing", false, "full curve unavailable (criterion 3 failed)", 0.0);
    return;
  }
  const auto& pts = g_full.curve.points;
  bool monotone = true;
  int jumps = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].complexity < pts[i - 1].complexity - 1e-6) monotone = false;
    if (pts[i].accuracy < pts[i - 1].accuracy - 1e-6) monotone = false;
    if (pts[i].effective_k > pts[i - 1].effective_k) ++jumps;
  }

  // Concavity of the accuracy-vs-complexity polyline: nonincreasing slopes
  // over points deduplicated in complexity.
  std::vector<std::pair<double, double>> poly;
  for (const IBPoint& p : pts) {
    if (poly.empty() || p.complexity > poly.back().first + 1e-9) {
      poly.push_back({p.complexity, p.accuracy});
    }
  }
  bool concave = true;
  double prev_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < poly.size(); ++i) {
    double slope = (poly[i].second - poly[i - 1].second) / (poly[i].first - poly[i - 1].first);
    if (slope > prev_slope + 1e-6) concave = false;
    prev_slope = slope;
  }

  double elapsed = timer.seconds();
  report(4, "monotone annealing with phase transitions", monotone && concave && jumps >= 5,
         std::string("monotone: ") + (monotone ? "yes" : "NO") + ", concave: " +
             (concave ? "yes" : "NO") + ", effective_k jumps: " + std::to_string(jumps),
         elapsed);
}

// ---------------------------------------------------------------- criterion 5

struct DataPaths {
  fs::path wcs_dir;
  fs::path english;
  bool wcs_ok = false;
  bool english_ok = false;
};

DataPaths find_data() {
  DataPaths paths;
  if (const char* dir = std::getenv("IBCOLOR_WCS_DIR")) {
    paths.wcs_dir = dir;
    paths.wcs_ok = fs::exists(paths.wcs_dir / "chip.txt") &&
                   fs::exists(paths.wcs_dir / "cnum-vhcm-lab.txt") &&
                   fs::exists(paths.wcs_dir / "term.txt");
  }
  if (const char* eng = std::getenv("IBCOLOR_ENGLISH_FILE")) {
    paths.english = eng;
    paths.english_ok = fs::exists(paths.english);
  }
  return paths;
}

void criterion_5(const DataPaths& data) {
  if (!data.wcs_ok || !data.english_ok) {
    report_skip(5, "Table 1 reproduction",
                "WCS + English data not found on disk; set IBCOLOR_WCS_DIR (chip.txt, "
                "cnum-vhcm-lab.txt, term.txt) and IBCOLOR_ENGLISH_FILE to enable the full "
                "5-fold pipeline");
    return;
  }
  Timer timer;
  RunConfig config;
  config.chip_path = (data.wcs_dir / "chip.txt").string();
  config.lab_path = (data.wcs_dir / "cnum-vhcm-lab.txt").string();
  config.term_path = (data.wcs_dir / "term.txt").string();
  config.english_path = data.english.string();
  const char* work = std::getenv("IBCOLOR_WORK_DIR");
  config.out_dir = work != nullptr ? work : (fs::temp_directory_path() / "ibcolor_table1").string();

  std::ostringstream log;
  bool pass = cmd_ingest(config, log) == kExitOk && cmd_crossval(config, log) == kExitOk;
  std::string detail = "pipeline failed";
  if (pass) {
    auto summary = nlohmann::json::parse(
        read_text_file(fs::path(config.out_dir) / "crossval_summary.json"));
    const auto& p = summary.at("pooled");
    double eps_ib = p.at("IB").at("epsilon").at("mean").get<double>();
    double gnid_ib = p.at("IB").at("gnid").at("mean").get<double>();
    double eps_cib = p.at("C-IB").at("epsilon").at("mean").get<double>();
    double gnid_cib = p.at("C-IB").at("gnid").at("mean").get<double>();
    double eps_rkk = p.at("RKK+").at("epsilon").at("mean").get<double>();
    double gnid_rkk = p.at("RKK+").at("gnid").at("mean").get<double>();
    pass = std::abs(eps_ib - 0.18) <= 0.10 && std::abs(gnid_ib - 0.18) <= 0.10 &&
           std::abs(eps_rkk - 0.70) <= 0.25 && std::abs(gnid_rkk - 0.47) <= 0.15 &&
           std::abs(eps_cib - eps_ib) <= 0.10 && std::abs(gnid_cib - gnid_ib) <= 0.10;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "IB eps=%.3f gnid=%.3f; C-IB eps=%.3f gnid=%.3f; RKK+ eps=%.3f gnid=%.3f",
                  eps_ib, gnid_ib, eps_cib, gnid_cib, eps_rkk, gnid_rkk);
    detail = buf;
  }
  double elapsed = timer.seconds();
  report(5, "Table 1 reproduction (5-fold cross-validation)", pass && elapsed < 4 * 3600.0,
         detail, elapsed);
}

// ---------------------------------------------------------------- criterion 6

void criterion_6(const DataPaths& data) {
  Timer timer;
  // Closed-form oracle: C = 1 - H2(0.1).
  const double flip = 0.1;
  double expected = 1.0 + flip * std::log2(flip) + (1 - flip) * std::log2(1 - flip);
  Matrix bsc(2, 2);
  bsc(0, 0) = 1 - flip;
  bsc(0, 1) = flip;
  bsc(1, 0) = flip;
  bsc(1, 1) = 1 - flip;
  LanguagePrior bsc_prior = reference_prior(bsc, 1e-10, 100000);
  double bsc_err = std::abs(bsc_prior.capacity - expected);
  bool pass = bsc_prior.converged && bsc_err < 1e-6;

  // KKT on language channels.
  std::vector<LanguageEncoder> encoders;
  std::string channel_note;
  if (data.wcs_ok) {
    std::ifstream term_in(data.wcs_dir / "term.txt");
    TermData terms = parse_term_file(term_in);
    encoders = estimate_all_encoders(terms.observations, kWcsChipCount);
    channel_note = std::to_string(encoders.size()) + " WCS channels";
  } else {
    Palette palette = fx::synthetic_palette();
    std::istringstream term_in(fx::term_file_text(
        palette, {{1, 3, 6}, {2, 4, 6}, {3, 5, 6}, {4, 6, 6}, {5, 7, 6}, {6, 4, 6}}, 31));
    TermData terms = parse_term_file(term_in);
    encoders = estimate_all_encoders(terms.observations, kWcsChipCount);
    channel_note = "6 synthetic channels (WCS data not found; real-channel check skipped)";
  }
  double worst_kkt = 0.0;
  for (const LanguageEncoder& enc : encoders) {
    LanguagePrior p = reference_prior(enc.cond, 1e-10, 100000);
    if (!p.converged) pass = false;
    worst_kkt = std::max(worst_kkt, capacity_kkt_violation_bits(enc.cond, p.probs, p.capacity));
  }
  if (worst_kkt >= 1e-8) pass = false;

  report(6, "capacity oracle", pass,
         "BSC capacity error " + fmt_sci(bsc_err) + " bits; max KKT violation " +
             fmt_sci(worst_kkt) + " on " + channel_note,
         timer.seconds());
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
  Timer timer;
  Vec prior = fx::random_prior(12, 90);
  Matrix det(12, 3, 0.0);
  for (std::size_t m = 0; m < 12; ++m) det(m, m % 3) = 1.0;
  Matrix relabeled(12, 3, 0.0);
  std::size_t perm[3] = {2, 0, 1};
  for (std::size_t m = 0; m < 12; ++m) {
    for (std::size_t w = 0; w < 3; ++w) relabeled(m, perm[w]) = det(m, w);
  }
  Matrix single(12, 1, 1.0);
  Matrix soft_a = fx::random_encoder(12, 4, 91);
  Matrix soft_b = fx::random_encoder(12, 6, 92);

  double self_d = gnid(det, det, prior);
  double relabel_d = gnid(det, relabeled, prior);
  double single_d = gnid(det, single, prior);
  double sym = std::abs(gnid(soft_a, soft_b, prior) - gnid(soft_b, soft_a, prior));

  bool pass = std::abs(self_d) < 1e-12 && std::abs(relabel_d) < 1e-12 &&
              std::abs(single_d - 1.0) < 1e-12 && sym < 1e-12;
  report(7, "gNID metric properties", pass,
         "self " + fmt_sci(self_d) + ", relabeled " + fmt_sci(relabel_d) + ", vs single-word " +
             fmt_sci(std::abs(single_d - 1.0)) + ", asymmetry " + fmt_sci(sym),
         timer.seconds());
}

// ---------------------------------------------------------------- criterion 8

bool same_bytes(const fs::path& a, const fs::path& b) {
  return read_text_file(a) == read_text_file(b);
}

void criterion_8() {
  Timer timer;
  fs::path dir = fs::temp_directory_path() / "ibcolor_acceptance_det";
  fs::remove_all(dir);
  auto files = fx::write_fixture_files(dir / "data",
                                       {{1, 3, 4}, {2, 4, 4}, {3, 5, 4}, {4, 4, 4}, {5, 6, 4},
                                        {6, 3, 4}},
                                       77);
  RunConfig base;
  base.chip_path = files.chip.string();
  base.lab_path = files.lab.string();
  base.term_path = files.term.string();
  base.beta_min = 1.0;
  base.beta_max = 512.0;
  base.beta_steps = 16;
  base.solver_tol = 1e-7;
  base.folds = 2;
  base.rkk_restarts = 2;
  base.rkk_anneal_steps = 8;
  base.seed = 2026;

  bool pass = true;
  std::string detail = "curve + crossval artifacts byte-identical across reruns";
  std::ostringstream log;
  RunConfig a = base, b = base;
  a.out_dir = (dir / "out_a").string();
  b.out_dir = (dir / "out_b").string();
  for (const RunConfig* cfg : {&a, &b}) {
    if (cmd_ingest(*cfg, log) != kExitOk || cmd_curve(*cfg, log) != kExitOk ||
        cmd_crossval(*cfg, log) != kExitOk) {
      pass = false;
      detail = "pipeline command failed: " + log.str();
    }
  }
  if (pass) {
    for (const char* name :
         {"palette.json", "encoders.json", "priors.json", "source.json", "curve.json",
          "transitions.json", "curve_encoders.bin", "crossval.tsv", "crossval_summary.json"}) {
      if (!same_bytes(fs::path(a.out_dir) / name, fs::path(b.out_dir) / name)) {
        pass = false;
        detail = std::string("artifact differs between reruns: ") + name;
        break;
      }
    }
  }
  fs::remove_all(dir);
  report(8, "determinism of cmd_curve and cmd_crossval", pass, detail, timer.seconds());
}

}  // namespace

int main() {
  std::printf("ibcolor acceptance suite (%s, %d threads)\n", kCodeVersion,
              kernels::max_threads());
  DataPaths data = find_data();

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5(data);
  criterion_6(data);
  criterion_7();
  criterion_8();

  if (g_failures == 0) {
    std::printf("acceptance: all executed criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
