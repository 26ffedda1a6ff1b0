// Command-line front end. Subcommands: ingest, curve, eval, crossval, export.
// A JSON config file supplies paths and parameters; flags override config
// keys. Progress goes to stderr, machine-readable outputs go to files only.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ibcolor/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string out_dir;
  double sigma_sq = -1.0;
  double beta_min = -1.0;
  double beta_max = -1.0;
  int beta_steps = -1;
  std::int64_t seed = -1;
  int language = -1;
  int folds = -1;
  std::string backend;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--sigma-sq", o.sigma_sq, "perceptual variance in CIELAB dE^2 units");
  cmd->add_option("--beta-min", o.beta_min, "first beta of the schedule");
  cmd->add_option("--beta-max", o.beta_max, "last beta of the schedule");
  cmd->add_option("--beta-steps", o.beta_steps, "number of schedule points");
  cmd->add_option("--seed", o.seed, "RNG seed recorded in every output");
  cmd->add_option("--backend", o.backend, "kernel backend: openmp or serial");
}

ibcolor::RunConfig resolve(const Overrides& o) {
  ibcolor::RunConfig config;
  if (!o.config_path.empty()) config = ibcolor::load_config(o.config_path);
  if (!o.out_dir.empty()) config.out_dir = o.out_dir;
  if (o.sigma_sq > 0.0) config.sigma_sq = o.sigma_sq;
  if (o.beta_min > 0.0) config.beta_min = o.beta_min;
  if (o.beta_max > 0.0) config.beta_max = o.beta_max;
  if (o.beta_steps > 0) config.beta_steps = o.beta_steps;
  if (o.seed >= 0) config.seed = static_cast<std::uint64_t>(o.seed);
  if (o.language >= 0) config.language = o.language;
  if (o.folds > 0) config.folds = o.folds;
  if (!o.backend.empty()) config.backend = o.backend;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information Bottleneck analysis of color naming data"};
  app.require_subcommand(1);

  Overrides o;
  CLI::App* ingest = app.add_subcommand("ingest", "parse data files, estimate encoders and priors");
  CLI::App* curve = app.add_subcommand("curve", "compute the annealed IB curve");
  CLI::App* eval = app.add_subcommand("eval", "score languages against the stored curve");
  CLI::App* crossval = app.add_subcommand("crossval", "k-fold cross-validated evaluation");
  CLI::App* exp = app.add_subcommand("export", "contour-grid export for one language");
  for (CLI::App* cmd : {ingest, curve, eval, crossval, exp}) add_common(cmd, o);
  crossval->add_option("--folds", o.folds, "number of folds");
  exp->add_option("--language", o.language, "language id to export")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ibcolor::RunConfig config = resolve(o);
    if (ingest->parsed()) return ibcolor::cmd_ingest(config, std::cerr);
    if (curve->parsed()) return ibcolor::cmd_curve(config, std::cerr);
    if (eval->parsed()) return ibcolor::cmd_eval(config, std::cerr);
    if (crossval->parsed()) return ibcolor::cmd_crossval(config, std::cerr);
    if (exp->parsed()) return ibcolor::cmd_export(config, std::cerr);
  } catch (const ibcolor::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ibcolor::kExitInput;
  }
  return ibcolor::kExitInput;
}
