// cvbell: evaluate CV Bell-inequality violations, partial-transpose witnesses
// and simulated loophole experiments from a config file.
//
//   cvbell eval|sweep|npt|experiment --config <path> [--seed N] [--out <dir>]
//                                    [--workers N]

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "cvbell/channels.hpp"
#include "cvbell/config.hpp"
#include "cvbell/report.hpp"

namespace fs = std::filesystem;
using namespace cvbell;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

std::string now_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

fs::path resolve_out_dir(const CliOptions& opts) {
  std::string dir = opts.out_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("CVBELL_OUT")) dir = env;
  }
  if (dir.empty()) dir = "out";
  fs::create_directories(dir);
  return dir;
}

void emit(const fs::path& out_dir, RunManifest& manifest, const std::string& name,
          const std::string& content) {
  write_text_file((out_dir / name).string(), content);
  manifest.outputs.push_back(name);
}

void finalize_manifest(const fs::path& out_dir, RunManifest& manifest,
                       std::chrono::steady_clock::time_point start) {
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.timestamp = now_timestamp();
  manifest.outputs.push_back("manifest.json");
  write_text_file((out_dir / "manifest.json").string(), manifest_json_text(manifest));
  std::cout << "outputs written to " << out_dir.string() << "/\n";
}

FockTensor<double> state_with_loss(const StateSpec<double>& spec, double eta) {
  FockTensor<double> state = build(spec);
  if (eta < 1.0) state = apply_loss_all_modes(state, eta);
  return state;
}

int cmd_eval(const CliOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  const StateSpec<double> spec = resolve_state_spec(cfg);
  const EvalSettings settings = resolve_eval_settings(cfg);
  cfg.check_all_consumed();

  const FockTensor<double> state = state_with_loss(spec, settings.eta);
  std::vector<InequalityReport<double>> reports;
  for (Family family : settings.families)
    for (int k = 1; k <= state.num_modes() - 1; ++k)
      reports.push_back(evaluate(state, family, k, settings.tol));

  print_inequality_table(std::cout, reports);

  const fs::path out_dir = resolve_out_dir(opts);
  RunManifest manifest;
  manifest.command = "eval";
  manifest.config_path = opts.config_path;
  manifest.workers = opts.workers;
  manifest.config_echo = cfg.raw_text();
  std::string csv = csv_manifest_comment() + inequality_csv_header();
  for (const auto& r : reports) csv += inequality_csv_row(r);
  emit(out_dir, manifest, "reports.csv", csv);
  emit(out_dir, manifest, "reports.json", inequality_json_text(reports));
  finalize_manifest(out_dir, manifest, start);
  return 0;
}

int cmd_npt(const CliOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  const StateSpec<double> spec = resolve_state_spec(cfg);
  const double tol = resolve_npt_tol(cfg);
  cfg.check_all_consumed();

  const FockTensor<double> state = build(spec);
  std::vector<PTReport<double>> reports;
  for (int k = 1; k <= state.num_modes() - 1; ++k)
    reports.push_back(pt_report(state, second_group(state.num_modes(), k), tol));

  print_pt_table(std::cout, reports);

  const fs::path out_dir = resolve_out_dir(opts);
  RunManifest manifest;
  manifest.command = "npt";
  manifest.config_path = opts.config_path;
  manifest.workers = opts.workers;
  manifest.config_echo = cfg.raw_text();
  std::string csv = csv_manifest_comment() + pt_csv_header();
  for (const auto& r : reports) csv += pt_csv_row(r);
  emit(out_dir, manifest, "npt.csv", csv);
  emit(out_dir, manifest, "npt.json", pt_json_text(reports));
  finalize_manifest(out_dir, manifest, start);
  return 0;
}

int cmd_experiment(const CliOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ConfigFile cfg = ConfigFile::parse_file(opts.config_path);
  ExperimentConfig config = resolve_experiment_config(cfg);
  cfg.check_all_consumed();
  if (opts.seed) config.seed = *opts.seed;
  config.workers = opts.workers;

  const LoopholeReport report = run_experiment(config);
  print_loophole_summary(std::cout, report);

  const fs::path out_dir = resolve_out_dir(opts);
  RunManifest manifest;
  manifest.command = "experiment";
  manifest.config_path = opts.config_path;
  manifest.seed = config.seed;
  manifest.workers = opts.workers;
  manifest.config_echo = cfg.raw_text();
  emit(out_dir, manifest, "loophole.json", loophole_json_text(report));
  emit(out_dir, manifest, "ingredients.csv",
       csv_manifest_comment() + ingredients_csv(report.ingredients));
  if (config.record_trials)
    emit(out_dir, manifest, "trials.csv", csv_manifest_comment() + trial_log_csv(report));
  finalize_manifest(out_dir, manifest, start);
  return 0;
}

// One sweep value -> one CSV row. The swept parameter is applied to a copy of
// the base state/experiment configuration.
struct SweepRunner {
  StateSpec<double> spec;
  bool explicit_cutoff = false;
  SweepSettings sweep;
  EvalSettings eval;
  ExperimentConfig experiment;
  int bipartition = 1;

  StateSpec<double> spec_for(double value) const {
    StateSpec<double> s = spec;
    if (sweep.axis == "r") {
      if (auto* t = std::get_if<StateSpec<double>::Tmss>(&s.variant)) {
        t->r = value;
        if (!explicit_cutoff) s.cutoffs = {tmss_min_cutoff(value, s.tail_tol / 10)};
      } else if (auto* e = std::get_if<StateSpec<double>::MultimodeEpr>(&s.variant)) {
        e->r = value;
        if (!explicit_cutoff)
          s.cutoffs = {squeezed_min_cutoff(value, s.tail_tol / (10.0 * e->n_modes))};
      } else {
        throw ConfigError("sweep axis r requires a tmss or multimode_epr state");
      }
    } else if (sweep.axis == "theta" || sweep.axis == "phi") {
      auto* sp = std::get_if<StateSpec<double>::SinglePhoton>(&s.variant);
      if (!sp) throw ConfigError("sweep axis " + sweep.axis +
                                 " requires a single_photon state");
      (sweep.axis == "theta" ? sp->theta : sp->phi) = value;
    } else if (sweep.axis == "p_s") {
      auto* g = std::get_if<StateSpec<double>::GhzVacuum>(&s.variant);
      if (!g) throw ConfigError("sweep axis p_s requires a ghz_vacuum state");
      g->p_s = value;
    }
    return s;
  }

  std::string run_eval_row(double value) const {
    if (eval.families.size() != 1)
      throw ConfigError("sweep with target eval needs a single family");
    double eta = eval.eta;
    int k = bipartition;
    StateSpec<double> s = spec;
    if (sweep.axis == "eta")
      eta = value;
    else if (sweep.axis == "k")
      k = static_cast<int>(value);
    else
      s = spec_for(value);
    const FockTensor<double> state = state_with_loss(s, eta);
    return sweep_eval_csv_row(value, evaluate(state, eval.families[0], k, eval.tol));
  }

  std::string run_experiment_row(double value) const {
    ExperimentConfig e = experiment;
    e.workers = 1;
    if (sweep.axis == "eta")
      e.eta = value;
    else if (sweep.axis == "p_d")
      e.p_detect = value;
    else if (sweep.axis == "k")
      throw ConfigError("sweep axis k is not available for experiment target");
    else
      e.state = spec_for(value);
    return sweep_experiment_csv_row(value, run_experiment(e));
  }
};

int cmd_sweep(const CliOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  ConfigFile cfg = ConfigFile::parse_file(opts.config_path);

  SweepRunner runner;
  runner.explicit_cutoff = cfg.has("state", "cutoff");
  runner.sweep = resolve_sweep_settings(cfg);
  runner.bipartition =
      static_cast<int>(cfg.get_int_or("sweep", "k", 1));
  if (runner.sweep.target == SweepTarget::Eval) {
    runner.spec = resolve_state_spec(cfg);
    runner.eval = resolve_eval_settings(cfg);
  } else {
    runner.experiment = resolve_experiment_config(cfg);
    if (opts.seed) runner.experiment.seed = *opts.seed;
    runner.spec = runner.experiment.state;
  }
  cfg.check_all_consumed();

  const auto& values = runner.sweep.values;
  std::vector<std::string> rows(values.size());
  const bool experiment_target = runner.sweep.target == SweepTarget::Experiment;
  auto run_one = [&](std::size_t i) {
    rows[i] = experiment_target ? runner.run_experiment_row(values[i])
                                : runner.run_eval_row(values[i]);
  };
  if (opts.workers > 1 && values.size() > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(opts.workers), values.size());
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < values.size();
             i = next.fetch_add(1)) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
  }

  // Rows emitted in input order regardless of worker scheduling.
  std::string csv = csv_manifest_comment() +
                    sweep_csv_header(runner.sweep.axis, experiment_target);
  for (const auto& row : rows) csv += row;
  std::cout << csv;

  const fs::path out_dir = resolve_out_dir(opts);
  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config_path = opts.config_path;
  manifest.seed = experiment_target ? runner.experiment.seed : 0;
  manifest.workers = opts.workers;
  manifest.config_echo = cfg.raw_text();
  emit(out_dir, manifest, "sweep.csv", csv);
  finalize_manifest(out_dir, manifest, start);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-variable Bell-inequality laboratory"};
  app.require_subcommand(1);

  CliOptions opts;
  const std::vector<std::pair<std::string, int (*)(const CliOptions&)>> commands = {
      {"eval", cmd_eval},
      {"sweep", cmd_sweep},
      {"npt", cmd_npt},
      {"experiment", cmd_experiment}};

  std::uint64_t seed_arg = 0;
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "config file path")->required();
    sub->add_option("--seed", seed_arg, "override the sampling seed");
    sub->add_option("--out", opts.out_dir,
                    "output directory (default $CVBELL_OUT or ./out)");
    sub->add_option("--workers", opts.workers, "concurrent workers for sweeps/shards");
    const auto fn_copy = fn;
    sub->callback([&, fn_copy, sub] {
      if (sub->count("--seed")) opts.seed = seed_arg;
      if (opts.workers < 1) throw ConfigError("--workers must be >= 1");
      const int rc = fn_copy(opts);
      if (rc != 0) std::exit(rc);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const SamplingError& e) {
    std::cerr << "sampling failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
