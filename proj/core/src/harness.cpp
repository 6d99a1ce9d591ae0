#include "rsr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "rsr/diagnostics.hpp"
#include "rsr/oracles.hpp"

namespace rsr {

namespace {

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double get_param(const std::vector<std::pair<std::string, double>>& params,
                 const std::string& key, const double* fallback = nullptr) {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  if (fallback) return *fallback;
  throw ConfigError("model parameter '" + key + "' is required");
}

int get_int_param(const std::vector<std::pair<std::string, double>>& params,
                  const std::string& key, const double* fallback = nullptr) {
  return static_cast<int>(std::llround(get_param(params, key, fallback)));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model.empty()) throw ConfigError("missing model name");
  if (model_params.empty()) throw ConfigError("model has no parameters");
  for (const auto& [k, vals] : model_params) {
    if (vals.empty()) throw ConfigError("sweep axis '" + k + "' is empty");
  }
  if (estimators.empty()) throw ConfigError("no estimators configured");
  for (const auto& e : estimators) {
    if (e.name != "spca" && e.name != "sggd" && e.name != "ransac") {
      throw ConfigError("unknown estimator '" + e.name + "'");
    }
  }
  if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
  if (!(recovery_tol > 0.0)) throw ConfigError("recovery_tol must be > 0");
}

long long ExperimentConfig::cell_count() const {
  long long n = 1;
  for (const auto& [k, vals] : model_params) n *= static_cast<long long>(vals.size());
  return n;
}

std::vector<std::pair<std::string, double>> ExperimentConfig::cell_params(
    long long cell_index) const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(model_params.size());
  long long rem = cell_index;
  // Mixed radix, last axis fastest.
  std::vector<long long> sizes;
  for (const auto& [k, vals] : model_params) sizes.push_back((long long)vals.size());
  std::vector<long long> digit(sizes.size(), 0);
  for (int i = static_cast<int>(sizes.size()) - 1; i >= 0; --i) {
    digit[static_cast<std::size_t>(i)] = rem % sizes[static_cast<std::size_t>(i)];
    rem /= sizes[static_cast<std::size_t>(i)];
  }
  for (std::size_t i = 0; i < model_params.size(); ++i) {
    out.emplace_back(model_params[i].first,
                     model_params[i].second[static_cast<std::size_t>(digit[i])]);
  }
  return out;
}

namespace {

struct ConfigLine {
  int number;
  std::string text;
};

std::vector<double> parse_numbers(const std::string& s, int line) {
  std::istringstream iss(s);
  std::vector<double> out;
  double v;
  while (iss >> v) out.push_back(v);
  if (out.empty() || !iss.eof()) {
    std::string rest;
    iss.clear();
    if (iss >> rest) throw ConfigError("expected numbers, got '" + rest + "'", line);
    if (out.empty()) throw ConfigError("expected at least one number", line);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string section;
  EstimatorSpec* current_estimator = nullptr;

  auto set_run_key = [&](const std::string& key, const std::string& value, int line) {
    if (key == "trials_per_cell") {
      cfg.trials_per_cell = static_cast<int>(parse_numbers(value, line)[0]);
    } else if (key == "base_seed") {
      cfg.base_seed = static_cast<std::uint64_t>(std::strtoull(value.c_str(), nullptr, 10));
    } else if (key == "recovery_tol") {
      cfg.recovery_tol = parse_numbers(value, line)[0];
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else {
      throw ConfigError("unknown [run] key '" + key + "'", line);
    }
  };

  auto set_estimator_key = [&](EstimatorSpec& e, const std::string& key,
                               const std::string& value, int line) {
    auto num = [&] { return parse_numbers(value, line)[0]; };
    if (key == "name") {
      e.name = value;
    } else if (key == "max_iter") {
      e.sggd.max_iter = static_cast<int>(num());
    } else if (key == "schedule") {
      if (value == "sqrt") e.sggd.schedule = StepSchedule::sqrt_decay;
      else if (value == "piecewise") e.sggd.schedule = StepSchedule::piecewise;
      else throw ConfigError("schedule must be sqrt or piecewise", line);
    } else if (key == "s0") {
      e.sggd.s0 = num();
    } else if (key == "shrink") {
      e.sggd.shrink_factor = num();
    } else if (key == "patience") {
      e.sggd.patience = static_cast<int>(num());
    } else if (key == "converge_tol") {
      e.sggd.converge_tol = num();
    } else if (key == "subgradient_eps") {
      e.sggd.subgradient_eps = num();
    } else if (key == "tau") {
      e.ransac.tau = num();
    } else if (key == "m") {
      e.ransac.consensus_m = static_cast<int>(num());
    } else if (key == "trials") {
      e.ransac.max_trials = static_cast<int>(num());
    } else {
      throw ConfigError("unknown [estimator] key '" + key + "'", line);
    }
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = line.substr(1, line.size() - 2);
      if (section == "estimator") {
        cfg.estimators.emplace_back();
        current_estimator = &cfg.estimators.back();
      } else if (section != "model" && section != "run") {
        throw ConfigError("unknown section [" + section + "]", line_no);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b2 = s.find_first_not_of(" \t");
      const auto e2 = s.find_last_not_of(" \t");
      s = (b2 == std::string::npos) ? "" : s.substr(b2, e2 - b2 + 1);
    };
    trim(key);
    trim(value);
    if (key.empty() || value.empty()) throw ConfigError("empty key or value", line_no);

    if (section == "model") {
      if (key == "name") {
        cfg.model = value;
      } else {
        cfg.model_params.emplace_back(key, parse_numbers(value, line_no));
      }
    } else if (section == "estimator") {
      if (!current_estimator) throw ConfigError("key outside a section", line_no);
      set_estimator_key(*current_estimator, key, value, line_no);
    } else if (section == "run") {
      set_run_key(key, value, line_no);
    } else {
      throw ConfigError("key outside a section", line_no);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_experiment_config_text(ss.str());
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, long long cell_index,
                         int trial_index) {
  return mix_seed(cfg.base_seed, static_cast<std::uint64_t>(cell_index),
                  static_cast<std::uint64_t>(trial_index));
}

namespace {

LabeledDataset build_dataset(const ExperimentConfig& cfg,
                             const std::vector<std::pair<std::string, double>>& p,
                             std::uint64_t seed) {
  Rng rng(mix_seed(seed, 1));
  const double zero = 0.0, one = 1.0;
  LabeledDataset clean = [&]() -> LabeledDataset {
    if (cfg.model == "haystack") {
      return gen_haystack(get_int_param(p, "D"), get_int_param(p, "d"),
                          get_int_param(p, "N_in"), get_int_param(p, "N_out"),
                          get_param(p, "sigma_in", &one),
                          get_param(p, "sigma_out", &one), rng);
    }
    if (cfg.model == "general_line") {
      const int D = get_int_param(p, "D"), d = get_int_param(p, "d");
      const int n_in = get_int_param(p, "N_in"), n_out = get_int_param(p, "N_out");
      const double magnitude = get_param(p, "magnitude", &one);
      Subspace truth = random_subspace(D, d, rng);
      LabeledDataset inliers = gen_general_position(truth, n_in, rng);
      if (n_out == 0) return inliers;
      Vector dir(D);
      do {
        for (int i = 0; i < D; ++i) dir(i) = rng.normal();
      } while (dir.norm() == 0.0 ||
               angle_to(truth, dir) <= tol::membership);
      return with_outliers(inliers, gen_adversarial_line(dir, n_out, magnitude));
    }
    if (cfg.model == "equipartition") {
      return fixture_axis_equipartition(get_int_param(p, "d"), get_int_param(p, "D"),
                                        get_int_param(p, "N_in"),
                                        get_int_param(p, "N_out"));
    }
    if (cfg.model == "axis_spike") {
      return fixture_axis_spike(get_int_param(p, "d"), get_int_param(p, "D"),
                                get_int_param(p, "N_in"), get_int_param(p, "N_out"));
    }
    throw ConfigError("unknown model '" + cfg.model + "'");
  }();

  const double eps = get_param(p, "noise_epsilon", &zero);
  if (eps > 0.0) {
    Rng noise_rng(mix_seed(seed, 3));
    return add_noise(clean, NoiseSpec{eps, NoiseKind::uniform_ball}, noise_rng);
  }
  return clean;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, long long cell_index,
                      int estimator_index, int trial_index) {
  const auto params = cfg.cell_params(cell_index);
  const EstimatorSpec& est = cfg.estimators[static_cast<std::size_t>(estimator_index)];
  const std::uint64_t seed = trial_seed(cfg, cell_index, trial_index);

  TrialResult r;
  r.cell_index = cell_index;
  r.trial_index = trial_index;
  r.estimator = est.name;
  r.seed = seed;
  r.params = params;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.theta1 = nan;
  r.energy_final = nan;
  r.kappa_d = nan;
  r.stability_lower_bound = nan;
  r.snr_required_sggd = nan;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    // Diagnostics are evaluated on the clean dataset; noise (if any) only
    // affects what the estimator sees.
    const double zero = 0.0;
    const double eps = get_param(params, "noise_epsilon", &zero);
    LabeledDataset ds = build_dataset(cfg, params, seed);
    r.snr = ds.snr();
    if (ds.truth()) {
      try {
        LabeledDataset clean =
            eps > 0.0
                ? [&] {
                    auto p2 = params;
                    for (auto& [k, v] : p2)
                      if (k == "noise_epsilon") v = 0.0;
                    return build_dataset(cfg, p2, seed);
                  }()
                : ds;
        const StabilityReport stab = stability_lower_bound(clean);
        r.kappa_d = stab.kappa_d;
        r.stability_lower_bound = stab.lower_bound;
        r.snr_required_sggd = stab.snr_required_sggd;
      } catch (const Error&) {
        // Diagnostics stay NaN when the clean data is degenerate.
      }
    }

    const int d = get_int_param(params, "d");
    Subspace estimate = [&]() -> Subspace {
      if (est.name == "spca") {
        return spca(ds.points(), d).subspace;
      }
      if (est.name == "sggd") {
        const Subspace init = spca(ds.points(), d).subspace;
        FitResult fit = sggd(ds.points(), d, init, est.sggd);
        r.iterations = fit.trace.iterations();
        return std::move(fit.estimate);
      }
      RansacConfig rc = est.ransac;
      rc.seed = mix_seed(seed, 2, static_cast<std::uint64_t>(estimator_index));
      FitResult fit = ransac_rsr(ds.points(), d, rc);
      r.iterations = fit.trace.iterations();
      return std::move(fit.estimate);
    }();
    r.energy_final = lad_energy(ds.points(), estimate);
    if (ds.truth()) {
      r.theta1 = largest_principal_angle(estimate, *ds.truth());
      r.recovered = r.theta1 < cfg.recovery_tol;
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == ',' || c == '\n' || c == ' ') c = '_';
    r.status = "error:" + msg;
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return r;
}

namespace {

void write_trials_csv(const std::string& path, const ExperimentConfig& cfg,
                      const std::vector<TrialResult>& trials) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << "cell_index,trial_index,model,estimator,seed";
  for (const auto& [k, vals] : cfg.model_params) f << ',' << k;
  f << ",theta1,recovered,iterations,energy_final,snr,kappa_d,"
       "stability_lower_bound,snr_required_sggd,status\n";
  for (const auto& t : trials) {
    f << t.cell_index << ',' << t.trial_index << ',' << cfg.model << ','
      << t.estimator << ',' << t.seed;
    for (const auto& [k, v] : t.params) f << ',' << format17(v);
    f << ',' << format17(t.theta1) << ',' << (t.recovered ? 1 : 0) << ','
      << t.iterations << ',' << format17(t.energy_final) << ','
      << format17(t.snr) << ',' << format17(t.kappa_d) << ','
      << format17(t.stability_lower_bound) << ','
      << format17(t.snr_required_sggd) << ',' << t.status << '\n';
  }
}

void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const std::vector<TrialResult>& trials) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << "cell_index,model,estimator";
  for (const auto& [k, vals] : cfg.model_params) f << ',' << k;
  f << ",trials,recovery_rate,mean_iterations,mean_theta1,snr,snr_required_sggd\n";

  // Trials arrive ordered by (cell, estimator, trial); aggregate runs of the
  // same (cell, estimator).
  std::size_t i = 0;
  while (i < trials.size()) {
    std::size_t j = i;
    int n = 0, rec = 0;
    double iter_sum = 0.0, theta_sum = 0.0;
    while (j < trials.size() && trials[j].cell_index == trials[i].cell_index &&
           trials[j].estimator == trials[i].estimator) {
      ++n;
      rec += trials[j].recovered ? 1 : 0;
      iter_sum += trials[j].iterations;
      theta_sum += trials[j].theta1;
      ++j;
    }
    const TrialResult& t = trials[i];
    f << t.cell_index << ',' << cfg.model << ',' << t.estimator;
    for (const auto& [k, v] : t.params) f << ',' << format17(v);
    f << ',' << n << ',' << format17(double(rec) / n) << ','
      << format17(iter_sum / n) << ',' << format17(theta_sum / n) << ','
      << format17(t.snr) << ',' << format17(t.snr_required_sggd) << '\n';
    i = j;
  }
}

void write_timing_csv(const std::string& path,
                      const std::vector<TrialResult>& trials) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << "cell_index,trial_index,estimator,wall_ms\n";
  for (const auto& t : trials) {
    f << t.cell_index << ',' << t.trial_index << ',' << t.estimator << ','
      << format17(t.wall_ms) << '\n';
  }
}

}  // namespace

SweepResult sweep(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  if (workers <= 0) {
    if (const char* env = std::getenv("RSR_WORKERS")) {
      workers = std::atoi(env);
    }
    if (workers <= 0) {
      workers = static_cast<int>(std::thread::hardware_concurrency());
    }
    if (workers <= 0) workers = 1;
  }

  const long long cells = cfg.cell_count();
  const int n_est = static_cast<int>(cfg.estimators.size());
  const long long total = cells * n_est * cfg.trials_per_cell;

  std::vector<TrialResult> results(static_cast<std::size_t>(total));
  std::atomic<long long> next{0};
  auto worker = [&] {
    for (;;) {
      const long long job = next.fetch_add(1);
      if (job >= total) return;
      const long long cell = job / (n_est * cfg.trials_per_cell);
      const long long rest = job % (n_est * cfg.trials_per_cell);
      const int est = static_cast<int>(rest / cfg.trials_per_cell);
      const int trial = static_cast<int>(rest % cfg.trials_per_cell);
      results[static_cast<std::size_t>(job)] = run_trial(cfg, cell, est, trial);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  SweepResult out;
  out.trials = std::move(results);
  out.trials_csv = (fs::path(cfg.output_dir) / "trials.csv").string();
  out.summary_csv = (fs::path(cfg.output_dir) / "summary.csv").string();
  out.timing_csv = (fs::path(cfg.output_dir) / "timing.csv").string();
  write_trials_csv(out.trials_csv, cfg, out.trials);
  write_summary_csv(out.summary_csv, cfg, out.trials);
  write_timing_csv(out.timing_csv, out.trials);
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void report_phase_transition(const std::string& summary_csv_path,
                             std::ostream& out, const std::string& out_prefix,
                             const std::string& threshold_column) {
  std::ifstream f(summary_csv_path);
  if (!f) throw Error("cannot open " + summary_csv_path);
  std::string line;
  if (!std::getline(f, line)) throw Error("empty summary CSV");
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_est = col("estimator"), c_rate = col("recovery_rate"), c_snr = col("snr");
  const int c_thresh = col(threshold_column);
  if (c_est < 0 || c_rate < 0 || c_snr < 0) {
    throw Error("summary CSV lacks estimator/recovery_rate/snr columns");
  }

  struct Row {
    double snr, rate, thresh;
  };
  std::map<std::string, std::vector<Row>> by_estimator;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    Row r;
    r.snr = std::strtod(cells[static_cast<std::size_t>(c_snr)].c_str(), nullptr);
    r.rate = std::strtod(cells[static_cast<std::size_t>(c_rate)].c_str(), nullptr);
    r.thresh = c_thresh >= 0
                   ? std::strtod(cells[static_cast<std::size_t>(c_thresh)].c_str(), nullptr)
                   : std::numeric_limits<double>::quiet_NaN();
    by_estimator[cells[static_cast<std::size_t>(c_est)]].push_back(r);
  }

  for (auto& [est, rows] : by_estimator) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.snr < b.snr; });
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].rate < rows[i - 1].rate - 1e-12) monotone = false;
    }
    std::string crossing;
    if (!rows.empty() && rows.front().rate >= 0.5) {
      crossing = "< " + std::string(format17(rows.front().snr));
    } else {
      crossing = "> " + std::string(rows.empty() ? "?" : format17(rows.back().snr));
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i - 1].rate < 0.5 && rows[i].rate >= 0.5) {
          const double t = (0.5 - rows[i - 1].rate) / (rows[i].rate - rows[i - 1].rate);
          crossing = format17(rows[i - 1].snr + t * (rows[i].snr - rows[i - 1].snr));
          break;
        }
      }
    }
    double thresh_mean = 0.0;
    int thresh_n = 0;
    for (const auto& r : rows) {
      if (std::isfinite(r.thresh)) {
        thresh_mean += r.thresh;
        ++thresh_n;
      }
    }
    out << "estimator=" << est << " crossing_snr=" << crossing << " "
        << threshold_column << "="
        << (thresh_n ? format17(thresh_mean / thresh_n) : "nan");
    if (!monotone) out << " warning=non_monotone_recovery_rate";
    out << "\n";

    std::ofstream pf(out_prefix + "_" + est + ".csv");
    if (!pf) throw Error("cannot write report CSV for " + est);
    pf << "snr,recovery_rate\n";
    for (const auto& r : rows) {
      pf << format17(r.snr) << ',' << format17(r.rate) << '\n';
    }
  }
}

}  // namespace rsr
