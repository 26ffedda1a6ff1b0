#include "ibcolor/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ibcolor/rng.hpp"

namespace ibcolor {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  auto get_or = [&](const json& node, const char* key, auto fallback) {
    using T = decltype(fallback);
    return node.contains(key) ? node.at(key).get<T>() : fallback;
  };
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.chip_path = get_or(d, "chip", std::string());
    c.lab_path = get_or(d, "lab", std::string());
    c.term_path = get_or(d, "term", std::string());
    c.english_path = get_or(d, "english", std::string());
  }
  c.sigma_sq = get_or(j, "sigma_sq", c.sigma_sq);
  if (j.contains("beta")) {
    const auto& b = j.at("beta");
    c.beta_min = get_or(b, "min", c.beta_min);
    c.beta_max = get_or(b, "max", c.beta_max);
    c.beta_steps = get_or(b, "steps", c.beta_steps);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    c.solver_tol = get_or(s, "tol", c.solver_tol);
    c.solver_max_iter = get_or(s, "max_iter", c.solver_max_iter);
    c.perturbation = get_or(s, "perturbation", c.perturbation);
    c.merge_tol = get_or(s, "merge_tol", c.merge_tol);
    c.reverse_refine = get_or(s, "reverse_refine", c.reverse_refine);
  }
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    c.prior_tol = get_or(p, "tol_bits", c.prior_tol);
    c.prior_max_iter = get_or(p, "max_iter", c.prior_max_iter);
  }
  if (j.contains("rkk")) {
    const auto& r = j.at("rkk");
    c.rkk_restarts = get_or(r, "restarts", c.rkk_restarts);
    c.rkk_anneal_steps = get_or(r, "anneal_steps", c.rkk_anneal_steps);
  }
  c.seed = get_or(j, "seed", c.seed);
  c.folds = get_or(j, "folds", c.folds);
  c.language = get_or(j, "language", c.language);
  c.out_dir = get_or(j, "out", c.out_dir);
  c.backend = get_or(j, "backend", c.backend);
  return c;
}

std::string config_to_json(const RunConfig& c) {
  JsonWriter w;
  w.begin_object();
  w.key("data");
  w.begin_object();
  w.key("chip");
  w.value(c.chip_path);
  w.key("lab");
  w.value(c.lab_path);
  w.key("term");
  w.value(c.term_path);
  w.key("english");
  w.value(c.english_path);
  w.end_object();
  w.key("sigma_sq");
  w.value(c.sigma_sq);
  w.key("beta");
  w.begin_object();
  w.key("min");
  w.value(c.beta_min);
  w.key("max");
  w.value(c.beta_max);
  w.key("steps");
  w.value(c.beta_steps);
  w.end_object();
  w.key("solver");
  w.begin_object();
  w.key("tol");
  w.value(c.solver_tol);
  w.key("max_iter");
  w.value(c.solver_max_iter);
  w.key("perturbation");
  w.value(c.perturbation);
  w.key("merge_tol");
  w.value(c.merge_tol);
  w.key("reverse_refine");
  w.value(c.reverse_refine);
  w.end_object();
  w.key("prior");
  w.begin_object();
  w.key("tol_bits");
  w.value(c.prior_tol);
  w.key("max_iter");
  w.value(c.prior_max_iter);
  w.end_object();
  w.key("rkk");
  w.begin_object();
  w.key("restarts");
  w.value(c.rkk_restarts);
  w.key("anneal_steps");
  w.value(c.rkk_anneal_steps);
  w.end_object();
  w.key("seed");
  w.value(c.seed);
  w.key("folds");
  w.value(c.folds);
  w.key("language");
  w.value(c.language);
  w.key("out");
  w.value(c.out_dir);
  w.end_object();
  return w.str();
}

std::string config_semantic_digest(const RunConfig& c) {
  JsonWriter w;
  w.begin_object();
  w.key("sigma_sq");
  w.value(c.sigma_sq);
  w.key("beta");
  w.begin_array();
  w.value(c.beta_min);
  w.value(c.beta_max);
  w.value(c.beta_steps);
  w.end_array();
  w.key("solver");
  w.begin_array();
  w.value(c.solver_tol);
  w.value(c.solver_max_iter);
  w.value(c.perturbation);
  w.value(c.merge_tol);
  w.value(c.reverse_refine);
  w.end_array();
  w.key("prior");
  w.begin_array();
  w.value(c.prior_tol);
  w.value(c.prior_max_iter);
  w.end_array();
  w.key("rkk");
  w.begin_array();
  w.value(c.rkk_restarts);
  w.value(c.rkk_anneal_steps);
  w.end_array();
  w.key("seed");
  w.value(c.seed);
  w.key("folds");
  w.value(c.folds);
  w.end_object();
  return fnv1a_hex(w.str());
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError("config file not found: " + path.string());
  try {
    return config_from_json(read_text_file(path));
  } catch (const json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
}

Backend config_backend(const RunConfig& config) {
  return config.backend == "serial" ? Backend::serial : kernels::default_backend();
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string space_digest_of(const Palette& palette, double sigma_sq) {
  std::string s = fmt(sigma_sq);
  for (const ColorChip& c : palette.chips) {
    s += "|" + std::to_string(c.id) + c.grid_row + std::to_string(c.grid_col) + "," + fmt(c.lab[0]) +
         "," + fmt(c.lab[1]) + "," + fmt(c.lab[2]);
  }
  return fnv1a_hex(s);
}

std::string vec_digest(const Vec& v) {
  std::string s;
  for (double x : v) {
    s += fmt(x);
    s += ',';
  }
  return fnv1a_hex(s);
}

std::ifstream open_input(const std::string& path, const char* what) {
  if (path.empty()) throw ParseError(std::string(what) + " file not configured");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(std::string("cannot open ") + what + " file: " + path);
  return in;
}

fs::path ensure_out_dir(const RunConfig& config) {
  fs::path out(config.out_dir);
  fs::create_directories(out);
  return out;
}

bool artifacts_present(const fs::path& out, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (!fs::exists(out / n)) return false;
  }
  return true;
}

void require_artifacts(const fs::path& out, std::initializer_list<const char*> names,
                       const char* producer) {
  for (const char* n : names) {
    if (!fs::exists(out / n)) {
      throw MissingArtifact(std::string("missing artifact ") + (out / n).string() + "; run '" +
                            producer + "' first");
    }
  }
}

int run_guarded(std::ostream& log, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const MissingArtifact& e) {
    log << "error: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const ConvergenceError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

// Forward sweep plus optional reverse refinement, with encoders streamed to
// file-backed stores; the final sidecar lands at sidecar_path.
IBCurve build_curve_with_sidecar(const Vec& prior, const MeaningSpace& space,
                                 const RunConfig& config, const fs::path& sidecar_path,
                                 std::ostream& log, const std::string& tag) {
  std::vector<double> schedule = geometric_schedule(config.beta_min, config.beta_max,
                                                    config.beta_steps);
  AnnealOptions options;
  options.tol = config.solver_tol;
  options.max_iter = config.solver_max_iter;
  options.perturbation = config.perturbation;
  options.merge_tol = config.merge_tol;
  options.seed = config.seed;
  options.backend = config_backend(config);
  const std::size_t report_every = schedule.size() >= 40 ? schedule.size() / 10 : schedule.size();
  options.on_point = [&](std::size_t i, const IBPoint& p) {
    if (i % report_every == 0 || i + 1 == schedule.size()) {
      log << tag << ": point " << i + 1 << "/" << schedule.size() << " beta=" << p.beta
          << " complexity=" << p.complexity << " accuracy=" << p.accuracy
          << " effective_k=" << p.effective_k << (p.converged ? "" : " [not converged]") << "\n";
    }
  };

  if (!config.reverse_refine) {
    auto store = std::make_unique<FileEncoderStore>(sidecar_path, 'w');
    IBCurve curve = anneal_curve(prior, space, schedule, options, store.get());
    store->finalize();
    curve.meta.space_digest = space_digest_of(space.palette, space.sigma_sq);
    curve.meta.prior_digest = vec_digest(prior);
    return curve;
  }

  fs::path fwd_tmp = sidecar_path;
  fwd_tmp += ".fwd.tmp";
  fs::path rev_tmp = sidecar_path;
  rev_tmp += ".rev.tmp";

  IBCurve merged;
  {
    FileEncoderStore fwd_store(fwd_tmp, 'w');
    IBCurve forward = anneal_curve(prior, space, schedule, options, &fwd_store);
    fwd_store.finalize();

    // Reverse refinement starts from the one-word-per-meaning limit.
    AnnealOptions rev = options;
    rev.reverse = true;
    FileEncoderStore rev_store(rev_tmp, 'w');
    IBCurve reverse = anneal_curve(prior, space, schedule, rev, &rev_store);
    rev_store.finalize();

    FileEncoderStore out_store(sidecar_path, 'w');
    merged = merge_curves(forward, reverse, &fwd_store, &rev_store, &out_store);
    out_store.finalize();
  }
  fs::remove(fwd_tmp);
  fs::remove(rev_tmp);
  merged.meta.space_digest = space_digest_of(space.palette, space.sigma_sq);
  merged.meta.prior_digest = vec_digest(prior);
  return merged;
}

std::string transitions_to_json(const IBCurve& curve, const std::string& config_digest) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("transitions/1");
  w.key("config_digest");
  w.value(config_digest);
  w.key("transitions");
  w.begin_array();
  for (const Transition& t : curve.transitions()) {
    w.begin_object();
    w.key("beta");
    w.value(t.beta);
    w.key("from");
    w.value(t.from_k);
    w.key("to");
    w.value(t.to_k);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

RkkOptions rkk_options_of(const RunConfig& config) {
  RkkOptions rkk;
  rkk.restarts = config.rkk_restarts;
  rkk.anneal_steps = config.rkk_anneal_steps;
  rkk.beta_max = config.beta_max;
  rkk.tol = config.solver_tol;
  rkk.max_iter = config.solver_max_iter;
  rkk.perturbation = config.perturbation;
  rkk.seed = derive_seed(config.seed, "rkk-full");
  rkk.backend = config_backend(config);
  return rkk;
}

std::string eval_tsv_header() {
  return "language_id\tn_terms\tfrequent_terms\tcomplexity\taccuracy\tbeta_ib\tdelta_f\teps_ib\t"
         "gnid_ib\tbeta_cib\teps_cib\tgnid_cib\trkk_log2_k\teps_rkk\tgnid_rkk\tflagged\n";
}

std::string eval_tsv_row(const PerLanguageEval& e) {
  std::string row = std::to_string(e.language_id) + "\t" + std::to_string(e.n_terms) + "\t" +
                    std::to_string(e.frequent_terms) + "\t" + fmt9(e.coords.complexity) + "\t" +
                    fmt9(e.coords.accuracy) + "\t" + fmt9(e.ib.beta) + "\t" + fmt9(e.ib.delta_f) +
                    "\t" + fmt9(e.ib.epsilon) + "\t" + fmt9(e.gnid_ib) + "\t" + fmt9(e.cib.beta) +
                    "\t" + fmt9(e.cib.epsilon) + "\t" + fmt9(e.gnid_cib) + "\t" +
                    fmt9(e.rkk.log2_k) + "\t" + fmt9(e.rkk.epsilon) + "\t" + fmt9(e.gnid_rkk) +
                    "\t" + (e.flagged ? "1" : "0") + "\n";
  return row;
}

void stats_json(JsonWriter& w, const Stats& s) {
  w.begin_object();
  w.key("mean");
  w.value(s.mean);
  w.key("sd");
  w.value(s.sd);
  w.key("n");
  w.value(s.n);
  w.end_object();
}

void principle_stats_json(JsonWriter& w, const PrincipleStats& p) {
  w.begin_object();
  w.key("IB");
  w.begin_object();
  w.key("epsilon");
  stats_json(w, p.eps_ib);
  w.key("gnid");
  stats_json(w, p.gnid_ib);
  w.end_object();
  w.key("C-IB");
  w.begin_object();
  w.key("epsilon");
  stats_json(w, p.eps_cib);
  w.key("gnid");
  stats_json(w, p.gnid_cib);
  w.end_object();
  w.key("RKK+");
  w.begin_object();
  w.key("epsilon");
  stats_json(w, p.eps_rkk);
  w.key("gnid");
  stats_json(w, p.gnid_rkk);
  w.end_object();
  w.end_object();
}

}  // namespace

int cmd_ingest(const RunConfig& config, std::ostream& log) {
  return run_guarded(log, [&] {
    fs::path out = ensure_out_dir(config);
    Manifest manifest = load_manifest(out);

    std::string chip_digest = [&] {
      open_input(config.chip_path, "chip");
      return file_digest(config.chip_path);
    }();
    open_input(config.lab_path, "lab");
    open_input(config.term_path, "term");
    std::string key = fnv1a_hex(chip_digest + file_digest(config.lab_path) +
                                file_digest(config.term_path) +
                                (config.english_path.empty() ? std::string("-")
                                                             : file_digest(config.english_path)) +
                                fmt(config.prior_tol) + std::to_string(config.prior_max_iter) +
                                kCodeVersion);
    if (manifest.entries.count("ingest.key") && manifest.entries["ingest.key"] == key &&
        artifacts_present(out, {"palette.json", "encoders.json", "priors.json", "source.json"})) {
      log << "ingest: cached artifacts match, skipping\n";
      return;
    }

    auto chip_in = open_input(config.chip_path, "chip");
    Palette palette = parse_chip_table(chip_in);
    auto lab_in = open_input(config.lab_path, "lab");
    apply_lab(palette, parse_lab_table(lab_in));

    auto term_in = open_input(config.term_path, "term");
    TermData terms = parse_term_file(term_in);
    if (terms.skipped_blank > 0) {
      log << "ingest: skipped " << terms.skipped_blank << " blank-term rows\n";
    }
    if (!config.english_path.empty()) {
      auto eng_in = open_input(config.english_path, "english");
      TermData eng = parse_term_file(eng_in, kEnglishLanguageId);
      if (eng.skipped_blank > 0) {
        log << "ingest: skipped " << eng.skipped_blank << " blank-term rows (english)\n";
      }
      terms.observations.insert(terms.observations.end(), eng.observations.begin(),
                                eng.observations.end());
    }

    std::vector<LanguageEncoder> encoders =
        estimate_all_encoders(terms.observations, static_cast<int>(palette.size()));
    log << "ingest: " << encoders.size() << " languages, " << palette.size() << " chips\n";

    std::vector<LanguagePrior> priors;
    for (const LanguageEncoder& enc : encoders) {
      LanguagePrior prior = reference_prior(enc.cond, config.prior_tol, config.prior_max_iter);
      prior.language_id = enc.language_id;
      if (!prior.converged) {
        throw ConvergenceError("reference prior did not converge for language " +
                               std::to_string(enc.language_id) + " (gap " + fmt(prior.gap) +
                               " bits)");
      }
      priors.push_back(std::move(prior));
    }
    CognitiveSource source = average_source(priors);

    write_text_file(out / "palette.json", palette_to_json(palette));
    write_text_file(out / "encoders.json", encoders_to_json(encoders));
    write_text_file(out / "priors.json", priors_to_json(priors));
    write_text_file(out / "priors_table.tsv", priors_table_tsv(priors));
    write_text_file(out / "source.json", source_to_json(source));

    manifest.entries["ingest.key"] = key;
    manifest.entries["input.chip"] = chip_digest;
    manifest.entries["input.lab"] = file_digest(config.lab_path);
    manifest.entries["input.term"] = file_digest(config.term_path);
    manifest.entries["input.english"] =
        config.english_path.empty() ? "-" : file_digest(config.english_path);
    manifest.entries["seed"] = std::to_string(config.seed);
    manifest.entries["config"] = config_semantic_digest(config);
    save_manifest(out, manifest);
    log << "ingest: wrote artifacts to " << out.string() << "\n";
  });
}

int cmd_curve(const RunConfig& config, std::ostream& log) {
  return run_guarded(log, [&] {
    fs::path out = ensure_out_dir(config);
    require_artifacts(out, {"palette.json", "source.json"}, "ingest");
    Manifest manifest = load_manifest(out);

    std::string key = fnv1a_hex(
        manifest.entries["ingest.key"] + fmt(config.sigma_sq) + fmt(config.beta_min) +
        fmt(config.beta_max) + std::to_string(config.beta_steps) + fmt(config.solver_tol) +
        std::to_string(config.solver_max_iter) + fmt(config.perturbation) + fmt(config.merge_tol) +
        (config.reverse_refine ? "r1" : "r0") + std::to_string(config.seed) + kCodeVersion);
    if (manifest.entries.count("curve.key") && manifest.entries["curve.key"] == key &&
        artifacts_present(out, {"curve.json", "curve_encoders.bin", "transitions.json"})) {
      log << "curve: cached artifacts match, skipping\n";
      return;
    }

    Palette palette = palette_from_json(read_text_file(out / "palette.json"));
    CognitiveSource source = source_from_json(read_text_file(out / "source.json"));
    MeaningSpace space = build_meaning_space(palette, config.sigma_sq);

    IBCurve curve =
        build_curve_with_sidecar(source.probs, space, config, out / "curve_encoders.bin", log,
                                 "curve");
    int failures = 0;
    for (const IBPoint& p : curve.points) {
      if (!p.converged) ++failures;
    }
    if (failures > 0) log << "curve: " << failures << " points flagged as not converged\n";

    std::string config_digest = config_semantic_digest(config);
    write_text_file(out / "curve.json", curve_to_json(curve, config_digest));
    write_text_file(out / "transitions.json", transitions_to_json(curve, config_digest));

    manifest.entries["curve.key"] = key;
    save_manifest(out, manifest);
    log << "curve: " << curve.points.size() << " points, " << curve.transitions().size()
        << " transitions\n";
  });
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  return run_guarded(log, [&] {
    fs::path out = ensure_out_dir(config);
    require_artifacts(out, {"palette.json", "source.json", "encoders.json"}, "ingest");
    require_artifacts(out, {"curve.json", "curve_encoders.bin"}, "curve");
    Manifest manifest = load_manifest(out);

    std::string key = fnv1a_hex(manifest.entries["curve.key"] + std::to_string(config.rkk_restarts) +
                                std::to_string(config.rkk_anneal_steps) +
                                std::to_string(config.seed) + kCodeVersion);
    if (manifest.entries.count("eval.key") && manifest.entries["eval.key"] == key &&
        artifacts_present(out, {"eval.tsv", "eval_summary.json"})) {
      log << "eval: cached artifacts match, skipping\n";
      return;
    }

    Palette palette = palette_from_json(read_text_file(out / "palette.json"));
    CognitiveSource source = source_from_json(read_text_file(out / "source.json"));
    std::vector<LanguageEncoder> encoders = encoders_from_json(read_text_file(out / "encoders.json"));
    IBCurve curve = curve_from_json(read_text_file(out / "curve.json"));
    FileEncoderStore store(out / "curve_encoders.bin", 'r');
    MeaningSpace space = build_meaning_space(palette, config.sigma_sq);

    RkkOptions rkk = rkk_options_of(config);
    std::map<int, RkkOptimum> rkk_cache;
    std::vector<PerLanguageEval> evals;
    for (const LanguageEncoder& enc : encoders) {
      PerLanguageEval e = evaluate_language(enc, source.probs, space, curve, store, rkk,
                                            &rkk_cache, config_backend(config));
      if (e.flagged) {
        log << "eval: language " << e.language_id << " flagged: " << e.flag_reason << "\n";
      }
      evals.push_back(std::move(e));
    }

    std::string tsv = eval_tsv_header();
    for (const PerLanguageEval& e : evals) tsv += eval_tsv_row(e);
    write_text_file(out / "eval.tsv", tsv);

    PrincipleStats stats = pooled_stats(evals);
    JsonWriter w;
    w.begin_object();
    w.key("format");
    w.value("eval_summary/1");
    w.key("code_version");
    w.value(kCodeVersion);
    w.key("config_digest");
    w.value(config_semantic_digest(config));
    w.key("seed");
    w.value(config.seed);
    w.key("epsilon_units");
    w.value("bits");
    w.key("languages");
    w.value(static_cast<std::int64_t>(evals.size()));
    w.key("principles");
    principle_stats_json(w, stats);
    w.end_object();
    write_text_file(out / "eval_summary.json", w.str());

    manifest.entries["eval.key"] = key;
    save_manifest(out, manifest);
    log << "eval: " << evals.size() << " languages scored\n";
  });
}

int cmd_crossval(const RunConfig& config, std::ostream& log) {
  return run_guarded(log, [&] {
    fs::path out = ensure_out_dir(config);
    require_artifacts(out, {"palette.json", "encoders.json", "priors.json"}, "ingest");
    Manifest manifest = load_manifest(out);

    std::string key = fnv1a_hex(
        manifest.entries["ingest.key"] + fmt(config.sigma_sq) + fmt(config.beta_min) +
        fmt(config.beta_max) + std::to_string(config.beta_steps) + fmt(config.solver_tol) +
        std::to_string(config.solver_max_iter) + fmt(config.perturbation) + fmt(config.merge_tol) +
        (config.reverse_refine ? "r1" : "r0") + std::to_string(config.folds) +
        std::to_string(config.rkk_restarts) + std::to_string(config.rkk_anneal_steps) +
        std::to_string(config.seed) + kCodeVersion);
    if (manifest.entries.count("crossval.key") && manifest.entries["crossval.key"] == key &&
        artifacts_present(out, {"crossval.tsv", "crossval_summary.json"})) {
      log << "crossval: cached artifacts match, skipping\n";
      return;
    }

    Palette palette = palette_from_json(read_text_file(out / "palette.json"));
    std::vector<LanguageEncoder> encoders = encoders_from_json(read_text_file(out / "encoders.json"));
    std::vector<LanguagePrior> priors = priors_from_json(read_text_file(out / "priors.json"));
    MeaningSpace space = build_meaning_space(palette, config.sigma_sq);

    fs::path cv_dir = out / "crossval";
    fs::create_directories(cv_dir);

    CrossValOptions options;
    options.folds = config.folds;
    options.seed = config.seed;
    options.rkk = rkk_options_of(config);
    options.backend = config_backend(config);

    CurveBuilder builder = [&](const Vec& fold_prior, const std::string& tag) -> BuiltCurve {
      fs::path fold_dir = cv_dir / tag;
      fs::create_directories(fold_dir);
      BuiltCurve built;
      built.curve = build_curve_with_sidecar(fold_prior, space, config,
                                             fold_dir / "curve_encoders.bin", log, tag);
      write_text_file(fold_dir / "curve.json",
                      curve_to_json(built.curve, config_semantic_digest(config)));
      built.store = std::make_unique<FileEncoderStore>(fold_dir / "curve_encoders.bin", 'r');
      return built;
    };

    CrossValReport report = cross_validate(encoders, priors, space, options, builder);

    std::string tsv = "fold\t" + eval_tsv_header();
    for (const FoldResult& fold : report.folds) {
      for (const PerLanguageEval& e : fold.evals) {
        tsv += std::to_string(fold.fold) + "\t" + eval_tsv_row(e);
      }
    }
    write_text_file(out / "crossval.tsv", tsv);

    JsonWriter w;
    w.begin_object();
    w.key("format");
    w.value("crossval_summary/1");
    w.key("code_version");
    w.value(kCodeVersion);
    w.key("config_digest");
    w.value(config_semantic_digest(config));
    w.key("seed");
    w.value(config.seed);
    w.key("folds");
    w.value(config.folds);
    w.key("epsilon_units");
    w.value("bits");
    w.key("flagged");
    w.value(report.flagged_count);
    w.key("pooled");
    principle_stats_json(w, report.pooled);
    w.key("per_fold");
    w.begin_array();
    for (const FoldResult& fold : report.folds) {
      w.begin_object();
      w.key("fold");
      w.value(fold.fold);
      w.key("held_out");
      w.begin_array();
      for (int id : fold.held_out_ids) w.value(id);
      w.end_array();
      w.key("principles");
      principle_stats_json(w, pooled_stats(fold.evals));
      w.end_object();
    }
    w.end_array();
    w.end_object();
    write_text_file(out / "crossval_summary.json", w.str());

    manifest.entries["crossval.key"] = key;
    save_manifest(out, manifest);
    log << "crossval: " << report.folds.size() << " folds, " << report.flagged_count
        << " flagged\n";
  });
}

namespace {

std::string grid_tsv(const Palette& palette, const Matrix& cond,
                     const std::vector<std::string>& names) {
  std::string out = "chip_id\tgrid_row\tgrid_col";
  for (const std::string& n : names) out += "\t" + n;
  out += '\n';
  for (std::size_t c = 0; c < palette.chips.size(); ++c) {
    const ColorChip& chip = palette.chips[c];
    out += std::to_string(chip.id) + "\t" + std::string(1, chip.grid_row) + "\t" +
           std::to_string(chip.grid_col);
    for (std::size_t w = 0; w < cond.cols(); ++w) {
      out += "\t" + fmt9(cond(c, w));
    }
    out += '\n';
  }
  return out;
}

std::string centroid_tsv(const Palette& palette, const Matrix& cond, const Vec& prior,
                         const std::vector<std::string>& names) {
  std::string out = "word\tmass\tL\ta\tb\n";
  for (std::size_t w = 0; w < cond.cols(); ++w) {
    double mass = 0.0;
    double lab[3] = {0.0, 0.0, 0.0};
    for (std::size_t c = 0; c < cond.rows(); ++c) {
      double u = prior[c] * cond(c, w);
      mass += u;
      for (int i = 0; i < 3; ++i) lab[i] += u * palette.chips[c].lab[i];
    }
    if (mass > 0.0) {
      for (double& x : lab) x /= mass;
    }
    out += names[w] + "\t" + fmt9(mass) + "\t" + fmt9(lab[0]) + "\t" + fmt9(lab[1]) + "\t" +
           fmt9(lab[2]) + "\n";
  }
  return out;
}

// Drops words with negligible marginal; IB encoders carry one column per
// meaning and only the live ones are worth exporting.
std::pair<Matrix, std::vector<std::string>> live_columns(const Matrix& cond, const Vec& prior) {
  Vec marginal = kernels::word_marginal(prior, cond);
  std::vector<std::size_t> keep;
  for (std::size_t w = 0; w < cond.cols(); ++w) {
    if (marginal[w] >= 1e-9) keep.push_back(w);
  }
  Matrix reduced(cond.rows(), keep.size());
  std::vector<std::string> names;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    names.push_back("w" + std::to_string(j));
    for (std::size_t r = 0; r < cond.rows(); ++r) reduced(r, j) = cond(r, keep[j]);
  }
  return {std::move(reduced), std::move(names)};
}

}  // namespace

int cmd_export(const RunConfig& config, std::ostream& log) {
  return run_guarded(log, [&] {
    fs::path out = ensure_out_dir(config);
    require_artifacts(out, {"palette.json", "source.json", "encoders.json"}, "ingest");
    require_artifacts(out, {"curve.json", "curve_encoders.bin"}, "curve");

    Palette palette = palette_from_json(read_text_file(out / "palette.json"));
    CognitiveSource source = source_from_json(read_text_file(out / "source.json"));
    std::vector<LanguageEncoder> encoders = encoders_from_json(read_text_file(out / "encoders.json"));
    IBCurve curve = curve_from_json(read_text_file(out / "curve.json"));
    FileEncoderStore store(out / "curve_encoders.bin", 'r');
    MeaningSpace space = build_meaning_space(palette, config.sigma_sq);

    const LanguageEncoder* lang = nullptr;
    for (const LanguageEncoder& e : encoders) {
      if (e.language_id == config.language) lang = &e;
    }
    if (lang == nullptr) {
      throw ParseError("unknown language id " + std::to_string(config.language));
    }

    LanguageCoords coords = language_coords(lang->cond, source.probs, space,
                                            config_backend(config));
    LanguageFit fit = fit_beta(coords, curve);
    Matrix matched = store.get(curve.points[fit.point_index].encoder_id);

    fs::path export_dir = out / "export";
    fs::create_directories(export_dir);
    std::string id = std::to_string(lang->language_id);
    write_text_file(export_dir / ("lang_" + id + "_grid.tsv"),
                    grid_tsv(palette, lang->cond, lang->terms));
    write_text_file(export_dir / ("lang_" + id + "_centroids.tsv"),
                    centroid_tsv(palette, lang->cond, source.probs, lang->terms));
    auto [ib_cond, ib_names] = live_columns(matched, source.probs);
    write_text_file(export_dir / ("ib_" + id + "_grid.tsv"), grid_tsv(palette, ib_cond, ib_names));
    write_text_file(export_dir / ("ib_" + id + "_centroids.tsv"),
                    centroid_tsv(palette, ib_cond, source.probs, ib_names));
    log << "export: language " << id << " matched at beta=" << fit.beta << " ("
        << ib_names.size() << " live IB words)\n";
  });
}

}  // namespace ibcolor
