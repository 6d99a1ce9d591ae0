// rsr: dataset generation, single fits, exact small-instance oracles,
// stability diagnostics, Monte Carlo sweeps, and phase-transition reports.
//
// Exit codes: 0 ok, 1 config/usage error, 2 runtime error (including a
// degenerate oracle verdict).

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "rsr/diagnostics.hpp"
#include "rsr/estimators.hpp"
#include "rsr/harness.hpp"
#include "rsr/oracles.hpp"

using namespace rsr;

namespace {

std::string f17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct GenArgs {
  std::string model = "haystack";
  std::string output;
  int D = 10, d = 2, n_in = 100, n_out = 20;
  double sigma_in = 1.0, sigma_out = 1.0;
  double magnitude = 1.0;
  double noise_epsilon = 0.0;
  std::string noise_kind = "uniform_ball";
  std::uint64_t seed = 0;
};

LabeledDataset generate(const GenArgs& a) {
  Rng rng(mix_seed(a.seed, 1));
  LabeledDataset ds = [&]() -> LabeledDataset {
    if (a.model == "haystack") {
      return gen_haystack(a.D, a.d, a.n_in, a.n_out, a.sigma_in, a.sigma_out, rng);
    }
    if (a.model == "general_line") {
      Subspace truth = random_subspace(a.D, a.d, rng);
      LabeledDataset inliers = gen_general_position(truth, a.n_in, rng);
      if (a.n_out == 0) return inliers;
      Vector dir(a.D);
      do {
        for (int i = 0; i < a.D; ++i) dir(i) = rng.normal();
      } while (dir.norm() == 0.0 || angle_to(truth, dir) <= tol::membership);
      return with_outliers(inliers,
                           gen_adversarial_line(dir, a.n_out, a.magnitude));
    }
    if (a.model == "equipartition") {
      return fixture_axis_equipartition(a.d, a.D, a.n_in, a.n_out);
    }
    if (a.model == "axis_spike") {
      return fixture_axis_spike(a.d, a.D, a.n_in, a.n_out);
    }
    if (a.model == "affine_line") {
      Subspace lin = random_subspace(a.D, a.d, rng);
      Vector raw(a.D);
      for (int i = 0; i < a.D; ++i) raw(i) = rng.normal();
      const Vector offset = raw - lin.basis() * (lin.basis().transpose() * raw);
      LabeledDataset on_flat = gen_general_position(lin, a.n_in, rng);
      Matrix pts(a.D, a.n_in + a.n_out);
      pts.leftCols(a.n_in) = on_flat.points().colwise() + offset;
      Vector q(a.D), v(a.D);
      for (int i = 0; i < a.D; ++i) {
        q(i) = rng.normal();
        v(i) = rng.normal();
      }
      v /= v.norm();
      for (int j = 0; j < a.n_out; ++j)
        pts.col(a.n_in + j) = q + (1.0 + j) * a.magnitude * v;
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(a.n_in + a.n_out), 0);
      for (int j = 0; j < a.n_in; ++j) mask[static_cast<std::size_t>(j)] = 1;
      return LabeledDataset(std::move(pts), std::move(mask), std::move(lin),
                            offset, {"affine_line", {}, a.seed});
    }
    throw ConfigError("unknown model '" + a.model + "'");
  }();
  if (a.noise_epsilon > 0.0) {
    NoiseKind kind;
    if (a.noise_kind == "uniform_ball") kind = NoiseKind::uniform_ball;
    else if (a.noise_kind == "gaussian_clipped") kind = NoiseKind::gaussian_clipped;
    else throw ConfigError("unknown noise kind '" + a.noise_kind + "'");
    Rng noise_rng(mix_seed(a.seed, 3));
    ds = add_noise(ds, NoiseSpec{a.noise_epsilon, kind}, noise_rng);
  }
  return ds;
}

int run_gen(const GenArgs& a) {
  LabeledDataset ds = generate(a);
  save_dataset(a.output, ds);
  std::cout << "wrote " << a.output << " D=" << ds.ambient_dim()
            << " N=" << ds.size() << " N_in=" << ds.n_inliers()
            << " snr=" << f17(ds.snr()) << "\n";
  return 0;
}

struct FitArgs {
  std::string estimator = "sggd";
  std::string data;
  std::string trace_csv;
  int d = 0;  // 0: use the dataset truth dimension
  std::uint64_t seed = 0;
  SggdConfig sggd;
  std::string schedule = "piecewise";
  RansacConfig ransac;
};

int run_fit(FitArgs& a) {
  LabeledDataset ds = load_dataset(a.data);
  int d = a.d;
  if (d <= 0) {
    if (!ds.truth()) throw ConfigError("--d is required when the file has no truth");
    d = ds.truth()->dim();
  }
  if (a.schedule == "sqrt") a.sggd.schedule = StepSchedule::sqrt_decay;
  else if (a.schedule == "piecewise") a.sggd.schedule = StepSchedule::piecewise;
  else throw ConfigError("schedule must be sqrt or piecewise");
  a.ransac.seed = mix_seed(a.seed, 2);

  const Subspace* truth = ds.truth() ? &*ds.truth() : nullptr;
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<FitTrace> trace;
  double theta1 = std::numeric_limits<double>::quiet_NaN();
  double offset_err = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string reason = "n/a";

  if (a.estimator == "spca") {
    SpcaResult r = spca(ds.points(), d);
    if (truth) theta1 = largest_principal_angle(r.subspace, *truth);
    energy = lad_energy(ds.points(), r.subspace);
    if (r.gap_warning) std::cerr << "warning: eigen-gap below 1e-12\n";
  } else if (a.estimator == "sggd") {
    const Subspace init = spca(ds.points(), d).subspace;
    FitResult r = sggd(ds.points(), d, init, a.sggd, truth);
    if (truth) theta1 = largest_principal_angle(r.estimate, *truth);
    energy = lad_energy(ds.points(), r.estimate);
    iterations = r.trace.iterations();
    reason = to_string(r.trace.reason);
    trace = std::move(r.trace);
  } else if (a.estimator == "ransac") {
    FitResult r = ransac_rsr(ds.points(), d, a.ransac, truth);
    if (truth) theta1 = largest_principal_angle(r.estimate, *truth);
    energy = lad_energy(ds.points(), r.estimate);
    iterations = r.trace.iterations();
    reason = to_string(r.trace.reason);
    trace = std::move(r.trace);
  } else if (a.estimator == "ransac_affine" || a.estimator == "affine_sggd") {
    std::optional<AffineSubspace> affine_truth;
    if (ds.truth() && ds.truth_offset()) {
      affine_truth = AffineSubspace(*ds.truth(), *ds.truth_offset());
    }
    AffineFitResult r =
        a.estimator == "ransac_affine"
            ? ransac_affine(ds.points(), d, a.ransac,
                            affine_truth ? &*affine_truth : nullptr)
            : affine_sggd_pipeline(ds, d, AffinePipelineConfig{a.sggd, 1e-10, 1000});
    if (affine_truth) {
      theta1 = largest_principal_angle(r.estimate.linear, affine_truth->linear);
      offset_err = (r.estimate.offset - affine_truth->offset).norm();
    }
    iterations = r.trace.iterations();
    reason = to_string(r.trace.reason);
    trace = std::move(r.trace);
  } else {
    throw ConfigError("unknown estimator '" + a.estimator + "'");
  }
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  std::cout << "estimator=" << a.estimator << " theta1=" << f17(theta1);
  if (std::isfinite(offset_err) || a.estimator.find("affine") != std::string::npos) {
    std::cout << " offset_error=" << f17(offset_err);
  }
  std::cout << " energy=" << f17(energy) << " iterations=" << iterations
            << " reason=" << reason << " wall_ms=" << f17(ms) << "\n";
  if (!a.trace_csv.empty()) {
    if (!trace) throw ConfigError("--trace is not available for this estimator");
    save_trace_csv(a.trace_csv, *trace);
  }
  return 0;
}

int run_oracle(const std::string& data, int d_flag) {
  LabeledDataset ds = load_dataset(data);
  int d = d_flag;
  if (d <= 0) {
    if (!ds.truth()) throw ConfigError("--d is required when the file has no truth");
    d = ds.truth()->dim();
  }
  SnrThresholds t = snr_and_thresholds(ds, d);
  L0Result l0 = l0_bruteforce(ds.points(), d);
  std::optional<WellDefined> wd;
  if (ds.truth()) wd = well_defined_check(ds, d);

  std::cout << "{\"snr\": " << f17(t.snr)
            << ", \"general_position_bound\": " << f17(t.general_position_bound)
            << ", \"directional_bound\": "
            << (t.directional_available ? f17(t.directional_bound) : "null")
            << ", \"hardness_bound\": " << f17(t.hardness_bound)
            << ", \"l0_count\": " << l0.best_count << ", \"l0_status\": \""
            << to_string(l0.status) << "\""
            << ", \"well_defined\": "
            << (wd ? std::string("\"") + to_string(*wd) + "\"" : "null") << "}\n";
  const bool degenerate =
      l0.status == L0Status::degenerate || (wd && *wd == WellDefined::degenerate);
  return degenerate ? 2 : 0;
}

int run_diag(const std::string& data, double gamma, int samples,
             std::uint64_t seed, const std::string& csv) {
  LabeledDataset ds = load_dataset(data);
  if (gamma <= 0.0) gamma = default_gamma();
  StabilityReport r = stability_lower_bound(ds, gamma);
  std::cout << "gamma=" << f17(r.gamma) << "\n"
            << "n_in=" << r.n_in << "\n"
            << "n_out=" << r.n_out << "\n"
            << "d=" << r.d << "\n"
            << "lambda_1_in=" << f17(r.lambda_1_in) << "\n"
            << "lambda_d_in=" << f17(r.lambda_d_in) << "\n"
            << "lambda_d_full=" << f17(r.lambda_d_full) << "\n"
            << "kappa_d=" << f17(r.kappa_d) << "\n"
            << "out_spectral=" << f17(r.out_spectral) << "\n"
            << "lower_bound=" << f17(r.lower_bound) << "\n"
            << "spca_condition_value=" << f17(r.spca_condition_value) << "\n"
            << "snr=" << f17(r.snr) << "\n"
            << "snr_required_sggd=" << f17(r.snr_required_sggd) << "\n"
            << "snr_required_spca=" << f17(r.snr_required_spca) << "\n";
  if (samples > 0) {
    Rng rng(mix_seed(seed, 4));
    const double est = stability_sup_estimate(ds, gamma, samples, rng);
    std::cout << "stability_estimate=" << f17(est) << "\n"
              << "stability_estimate_samples=" << samples << "\n";
  }
  if (!csv.empty()) {
    const bool fresh = !std::ifstream(csv).good();
    std::ofstream f(csv, std::ios::app);
    if (!f) throw Error("cannot open " + csv);
    if (fresh) {
      f << "gamma,n_in,n_out,d,lambda_1_in,lambda_d_in,lambda_d_full,kappa_d,"
           "out_spectral,lower_bound,spca_condition_value,snr,"
           "snr_required_sggd,snr_required_spca\n";
    }
    f << f17(r.gamma) << ',' << r.n_in << ',' << r.n_out << ',' << r.d << ','
      << f17(r.lambda_1_in) << ',' << f17(r.lambda_d_in) << ','
      << f17(r.lambda_d_full) << ',' << f17(r.kappa_d) << ','
      << f17(r.out_spectral) << ',' << f17(r.lower_bound) << ','
      << f17(r.spca_condition_value) << ',' << f17(r.snr) << ','
      << f17(r.snr_required_sggd) << ',' << f17(r.snr_required_spca) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust subspace recovery estimators, oracles, and experiment harness"};
  app.require_subcommand(1);

  // --- gen ---
  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "generate a dataset file");
  gen->add_option("--model", gen_args.model,
                  "haystack | general_line | equipartition | axis_spike | affine_line");
  gen->add_option("-o,--output", gen_args.output, "output path")->required();
  gen->add_option("--D", gen_args.D, "ambient dimension");
  gen->add_option("--d", gen_args.d, "subspace dimension");
  gen->add_option("--N-in", gen_args.n_in, "inlier count");
  gen->add_option("--N-out", gen_args.n_out, "outlier count");
  gen->add_option("--sigma-in", gen_args.sigma_in, "haystack inlier sigma");
  gen->add_option("--sigma-out", gen_args.sigma_out, "haystack outlier sigma");
  gen->add_option("--magnitude", gen_args.magnitude, "outlier magnitude");
  gen->add_option("--noise-epsilon", gen_args.noise_epsilon, "inlier noise bound");
  gen->add_option("--noise-kind", gen_args.noise_kind,
                  "uniform_ball | gaussian_clipped");
  gen->add_option("--seed", gen_args.seed, "generator seed");

  // --- fit ---
  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit one estimator to a dataset file");
  fit->add_option("--estimator", fit_args.estimator,
                  "spca | sggd | ransac | ransac_affine | affine_sggd");
  fit->add_option("--data", fit_args.data, "dataset file")->required();
  fit->add_option("--d", fit_args.d, "subspace dimension (default: truth dim)");
  fit->add_option("--seed", fit_args.seed, "estimator seed");
  fit->add_option("--trace", fit_args.trace_csv, "write per-iteration trace CSV");
  fit->add_option("--max-iter", fit_args.sggd.max_iter, "sggd iteration cap");
  fit->add_option("--schedule", fit_args.schedule, "sqrt | piecewise");
  fit->add_option("--s0", fit_args.sggd.s0, "initial step, radians");
  fit->add_option("--shrink", fit_args.sggd.shrink_factor, "piecewise shrink factor");
  fit->add_option("--patience", fit_args.sggd.patience, "piecewise patience");
  fit->add_option("--converge-tol", fit_args.sggd.converge_tol,
                  "movement stopping tolerance");
  fit->add_option("--subgradient-eps", fit_args.sggd.subgradient_eps,
                  "gradient term cutoff");
  fit->add_option("--tau", fit_args.ransac.tau,
                  "ransac consensus tolerance (angle, or distance for affine)");
  fit->add_option("--m", fit_args.ransac.consensus_m,
                  "ransac consensus threshold (0 = N/2)");
  fit->add_option("--trials", fit_args.ransac.max_trials, "ransac trial cap");

  // --- oracle ---
  std::string oracle_data;
  int oracle_d = 0;
  auto* oracle = app.add_subcommand("oracle", "exact small-instance checks");
  oracle->add_option("--data", oracle_data, "dataset file")->required();
  oracle->add_option("--d", oracle_d, "subspace dimension (default: truth dim)");

  // --- diag ---
  std::string diag_data, diag_csv;
  double diag_gamma = 0.0;
  int diag_samples = 0;
  std::uint64_t diag_seed = 0;
  auto* diag = app.add_subcommand("diag", "stability report for a dataset file");
  diag->add_option("--data", diag_data, "dataset file")->required();
  diag->add_option("--gamma", diag_gamma, "ball radius (default: acos(1/sqrt 3))");
  diag->add_option("--samples", diag_samples,
                   "ball samples for the stability estimate (0 = skip)");
  diag->add_option("--seed", diag_seed, "sampling seed");
  diag->add_option("--csv", diag_csv, "append one row to this report file");

  // --- sweep ---
  std::string sweep_config, sweep_outdir;
  std::uint64_t sweep_seed = 0;
  bool sweep_seed_set = false;
  int sweep_workers = 0;
  auto* sw = app.add_subcommand("sweep", "run a seeded Monte Carlo sweep");
  sw->add_option("--config", sweep_config, "experiment config file")->required();
  sw->add_option("--seed", sweep_seed, "override base_seed")
      ->each([&](const std::string&) { sweep_seed_set = true; });
  sw->add_option("--workers", sweep_workers, "worker threads (default: RSR_WORKERS)");
  sw->add_option("-o,--output-dir", sweep_outdir, "override output_dir");

  // --- report ---
  std::string report_summary, report_prefix = "phase", report_column = "snr_required_sggd";
  auto* rep = app.add_subcommand("report", "phase-transition summary from a sweep");
  rep->add_option("--summary", report_summary, "summary.csv from a sweep")->required();
  rep->add_option("--out-prefix", report_prefix, "prefix for per-estimator CSVs");
  rep->add_option("--threshold-column", report_column,
                  "theoretical column to print alongside");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen(gen_args);
    if (fit->parsed()) return run_fit(fit_args);
    if (oracle->parsed()) return run_oracle(oracle_data, oracle_d);
    if (diag->parsed())
      return run_diag(diag_data, diag_gamma, diag_samples, diag_seed, diag_csv);
    if (sw->parsed()) {
      ExperimentConfig cfg = parse_experiment_config(sweep_config);
      if (sweep_seed_set) cfg.base_seed = sweep_seed;
      if (!sweep_outdir.empty()) cfg.output_dir = sweep_outdir;
      SweepResult res = sweep(cfg, sweep_workers);
      std::cout << "trials=" << res.trials.size() << "\n"
                << "trials_csv=" << res.trials_csv << "\n"
                << "summary_csv=" << res.summary_csv << "\n"
                << "timing_csv=" << res.timing_csv << "\n";
      return 0;
    }
    if (rep->parsed()) {
      report_phase_transition(report_summary, std::cout, report_prefix,
                              report_column);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
