#pragma once

// Batch pipeline behind the CLI: ingest, curve, eval, crossval, export.
// Commands are library functions so tests can drive them in-process; the
// binary in tools/ is a thin argument parser over these.
//
// Exit codes: 0 success, 2 input/parse error, 3 convergence failure,
// 4 missing artifact.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "ibcolor/evaluation.hpp"
#include "ibcolor/io.hpp"

namespace ibcolor {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitMissingArtifact = 4;

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string chip_path;
  std::string lab_path;
  std::string term_path;
  std::string english_path;  // optional; ingested as language 111

  double sigma_sq = 64.0;
  double beta_min = 1.0;
  double beta_max = 8192.0;
  int beta_steps = 1500;

  double solver_tol = 1e-8;
  int solver_max_iter = 10000;
  double perturbation = 1e-4;
  double merge_tol = 1e-3;
  bool reverse_refine = true;

  double prior_tol = 1e-10;
  int prior_max_iter = 100000;

  int rkk_restarts = 5;
  int rkk_anneal_steps = 24;

  std::uint64_t seed = 2026;
  int folds = 5;
  int language = -1;  // export target
  std::string out_dir = "out";
  std::string backend = "openmp";  // or "serial"; results are bit-identical
};

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& config);  // full canonical dump
RunConfig load_config(const std::filesystem::path& path);
Backend config_backend(const RunConfig& config);

// Digest of the parameters that can change results. Paths, the output
// directory and the backend are excluded: input files are digested by
// content in the manifest, and serial/OpenMP kernels are bit-identical.
std::string config_semantic_digest(const RunConfig& config);

// Reads naming data and writes palette.json, encoders.json, priors.json,
// priors_table.tsv, source.json and the manifest.
int cmd_ingest(const RunConfig& config, std::ostream& log);

// Builds the annealed curve (forward plus reverse refinement by default) and
// writes curve.json, curve_encoders.bin and transitions.json.
int cmd_curve(const RunConfig& config, std::ostream& log);

// Scores every ingested language against the stored curve; writes eval.tsv
// and eval_summary.json.
int cmd_eval(const RunConfig& config, std::ostream& log);

// Seeded k-fold cross-validation; writes crossval.tsv and
// crossval_summary.json.
int cmd_crossval(const RunConfig& config, std::ostream& log);

// Contour-grid export for one language and its matched IB system; writes
// grid and centroid TSVs under export/.
int cmd_export(const RunConfig& config, std::ostream& log);

}  // namespace ibcolor
