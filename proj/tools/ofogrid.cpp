// Command-line front end: generate / warmstart / simulate / benchmark / report.
// Exit codes: 0 success, 1 internal error, 2 user or config error.
#include <CLI11.hpp>
#include <json.hpp>

#include "ofogrid/benchmark.hpp"
#include "ofogrid/io.hpp"
#include "ofogrid/random.hpp"
#include "ofogrid/sensitivity.hpp"
#include "ofogrid/simkit.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ofogrid;
using nlohmann::json;

namespace {

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file: {"<subcommand>": {"<long-option>": value, ...}, "threads": N}.
// Precedence is flags > file > built-in defaults; unknown keys are rejected.
void apply_config_section(CLI::App* app, const json& section)
{
  if (!section.is_object())
    throw UserError("config: section '" + app->get_name() + "' must be an object");
  for (const auto& [key, value] : section.items()) {
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw UserError("config: unknown key '" + key + "' in section '" +
                      app->get_name() + "'");
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    opt->default_val(text);
  }
}

void apply_config(CLI::App& app, const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw UserError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UserError(std::string("config: parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw UserError("config: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    CLI::App* sub = app.get_subcommand_no_throw(key);
    if (sub != nullptr) {
      apply_config_section(sub, value);
      continue;
    }
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) throw UserError("config: unknown key '" + key + "'");
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    opt->default_val(text);
  }
}

FleetScenario load_checked_scenario(const std::string& path)
{
  FleetScenario sc = load_scenario(path);
  const auto report = validate_scenario(sc, Bounds{});
  if (!report.ok())
    throw UserError("scenario " + path + " invalid: " + report.violations.front());
  return sc;
}

Vec tariff_for(const FleetScenario& sc, const std::string& tariff_path)
{
  if (tariff_path.empty()) return generate_reference_tariff(sc.grid);
  Vec p = load_series_csv(tariff_path);
  if (p.size() != sc.grid.steps_per_day)
    throw UserError("tariff length does not match the scenario grid");
  return p;
}

DsoConfig make_dso_config(double b, double alpha0, const std::string& schedule,
                          double sigma_u, double tau, const std::string& mode,
                          double p_min, double p_max, double l_max, bool no_mask)
{
  DsoConfig cfg;
  cfg.b = b;
  cfg.alpha.alpha0 = alpha0;
  if (schedule == "constant")
    cfg.alpha.kind = StepSchedule::Kind::Constant;
  else if (schedule == "decay")
    cfg.alpha.kind = StepSchedule::Kind::Decay;
  else
    throw UserError("unknown step schedule '" + schedule + "'");
  cfg.sigma_u = sigma_u;
  cfg.tau = tau;
  if (mode == "max")
    cfg.objective_mode = ObjectiveMode::Max;
  else if (mode == "lse")
    cfg.objective_mode = ObjectiveMode::Lse;
  else
    throw UserError("unknown objective mode '" + mode + "'");
  cfg.bounds = Bounds{p_min, p_max, l_max};
  const auto issues = validate_bounds(cfg.bounds);
  if (!issues.empty()) throw UserError("bounds: " + issues.front());
  cfg.mask_enabled = !no_mask;
  return cfg;
}

void print_report(const ReportSummary& sum)
{
  auto pct = [](double x) { return format_double(100.0 * x) + "%"; };
  std::cout << "window_days " << sum.window_days << '\n';
  if (sum.peak_ref) std::cout << "peak_ref_kw " << format_double(*sum.peak_ref) << '\n';
  if (sum.peak_bench)
    std::cout << "peak_benchmark_kw " << format_double(*sum.peak_bench) << '\n';
  if (sum.peak_ofo) std::cout << "peak_ofo_kw " << format_double(*sum.peak_ofo) << '\n';
  if (sum.peaks) {
    std::cout << "reduction_benchmark " << pct(sum.peaks->reduction_bench) << '\n';
    std::cout << "reduction_ofo " << pct(sum.peaks->reduction_ofo) << '\n';
    std::cout << "gap_to_benchmark " << pct(sum.peaks->gap_to_bench) << '\n';
    std::cout << "gap_over_baseline " << pct(sum.peaks->gap_over_baseline) << '\n';
  }
  if (sum.cost_ref) std::cout << "cost_ref " << format_double(*sum.cost_ref) << '\n';
  if (sum.cost_bench)
    std::cout << "cost_benchmark " << format_double(*sum.cost_bench) << '\n';
  if (sum.cost_ofo) std::cout << "cost_ofo " << format_double(*sum.cost_ofo) << '\n';
  if (sum.costs) {
    std::cout << "cost_saving_ofo " << pct(sum.costs->ofo_saving) << '\n';
    std::cout << "cost_saving_benchmark " << pct(sum.costs->bench_saving) << '\n';
    std::cout << "cost_ofo_vs_benchmark " << pct(sum.costs->ofo_vs_bench) << '\n';
  }
}

void write_report_csv(const ReportSummary& sum, const fs::path& path)
{
  std::ofstream out(path);
  if (!out) throw UserError("cannot write " + path.string());
  out << "metric,value\n";
  auto row = [&](const std::string& name, double v) {
    out << name << ',' << format_double(v) << '\n';
  };
  if (sum.peak_ref) row("peak_ref_kw", *sum.peak_ref);
  if (sum.peak_bench) row("peak_benchmark_kw", *sum.peak_bench);
  if (sum.peak_ofo) row("peak_ofo_kw", *sum.peak_ofo);
  if (sum.peaks) {
    row("reduction_benchmark", sum.peaks->reduction_bench);
    row("reduction_ofo", sum.peaks->reduction_ofo);
    row("gap_to_benchmark", sum.peaks->gap_to_bench);
    row("gap_over_baseline", sum.peaks->gap_over_baseline);
  }
  if (sum.costs) {
    row("cost_saving_ofo", sum.costs->ofo_saving);
    row("cost_saving_benchmark", sum.costs->bench_saving);
    row("cost_ofo_vs_benchmark", sum.costs->ofo_vs_bench);
  }
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Closed-loop dynamic pricing toolkit for EV fleet peak shaving"};
  app.require_subcommand(1);
  app.fallthrough();  // --config / --threads may follow the subcommand name

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags take precedence)");
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for fleet evaluation")
      ->envname("OFO_GRID_THREADS");

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic scenario and tariff");
  int gen_evs = 336;
  std::uint64_t gen_seed = 7;
  int gen_steps = 96, gen_minutes = 15;
  std::string gen_out = "out";
  gen->add_option("--evs", gen_evs, "number of charging sessions");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--steps", gen_steps, "steps per day");
  gen->add_option("--minutes", gen_minutes, "minutes per step");
  gen->add_option("--out", gen_out, "output directory");

  // warmstart
  auto* warm = app.add_subcommand("warmstart", "fit an initial sensitivity matrix");
  std::string warm_scenario, warm_tariff, warm_out = "h0.csv";
  int warm_days = 60;
  double warm_sigma = 0.01, warm_ridge = -1.0;
  std::uint64_t warm_seed = 1;
  warm->add_option("--scenario", warm_scenario, "scenario JSON")->required();
  warm->add_option("--tariff", warm_tariff, "tariff CSV (default: built-in)");
  warm->add_option("--days", warm_days, "history days");
  warm->add_option("--sigma", warm_sigma, "probing perturbation std");
  warm->add_option("--ridge", warm_ridge, "ridge weight (<0 = auto)");
  warm->add_option("--seed", warm_seed, "probing seed");
  warm->add_option("--out", warm_out, "output CSV");

  // shared controller knobs (simulate + benchmark)
  double b = 0.0002, alpha0 = 5e-5, sigma_u = 0.0, tau = 10.0;
  double p_min = 0.001, p_max = 1.0, l_max = 750.0;
  std::string schedule = "constant", objective = "max";
  bool no_mask = false;

  // simulate
  auto* sim = app.add_subcommand("simulate", "run the closed loop day by day");
  std::string sim_scenario, sim_tariff, sim_h0, sim_price, sim_out = "runs";
  std::string sim_method = "ofo";
  int sim_days = 121, sim_runs = 1, sim_mismatch = 0;
  double sim_sigma_tilde = 0.02, sim_init_sigma = 0.01;
  std::uint64_t sim_demand_seed = 1, sim_control_seed = 2;
  double osl_sigma_m = 100.0, osl_sigma_p = 100.0, osl_sigma0 = 1000.0;
  sim->add_option("--scenario", sim_scenario, "scenario JSON")->required();
  sim->add_option("--tariff", sim_tariff, "reference tariff CSV");
  sim->add_option("--method", sim_method, "ofo | reference | fixed");
  sim->add_option("--price", sim_price, "price CSV for --method fixed");
  sim->add_option("--days", sim_days, "simulated days");
  sim->add_option("--runs", sim_runs, "number of perturbed-initialization runs");
  sim->add_option("--sigma-tilde", sim_sigma_tilde, "initialization spread across runs");
  sim->add_option("--init-sigma", sim_init_sigma, "day-1 probing perturbation std");
  sim->add_option("--mismatch", sim_mismatch, "availability window shift in steps");
  sim->add_option("--h0", sim_h0, "warm-start sensitivity CSV (default: zero)");
  sim->add_option("--demand-seed", sim_demand_seed, "demand noise seed");
  sim->add_option("--control-seed", sim_control_seed, "controller randomness seed");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--b", b, "cost-deviation weight");
  sim->add_option("--alpha", alpha0, "step size");
  sim->add_option("--schedule", schedule, "constant | decay");
  sim->add_option("--sigma-u", sigma_u, "price excitation std");
  sim->add_option("--tau", tau, "smooth-peak temperature");
  sim->add_option("--objective", objective, "max | lse");
  sim->add_option("--p-min", p_min, "price lower bound");
  sim->add_option("--p-max", p_max, "price upper bound");
  sim->add_option("--l-max", l_max, "aggregate load cap, kW");
  sim->add_flag("--no-mask", no_mask, "disable the peak-event update mask");
  sim->add_option("--osl-sigma-m", osl_sigma_m, "measurement noise scale");
  sim->add_option("--osl-sigma-p", osl_sigma_p, "process noise scale");
  sim->add_option("--osl-sigma0", osl_sigma0, "initial covariance scale");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "offline full-information price");
  std::string bench_scenario, bench_tariff, bench_out = "benchmark.json";
  int bench_starts = 8, bench_mismatch = 0;
  std::uint64_t bench_seed = 1;
  bool bench_abs = false;
  bench->add_option("--scenario", bench_scenario, "scenario JSON")->required();
  bench->add_option("--tariff", bench_tariff, "reference tariff CSV");
  bench->add_option("--starts", bench_starts, "number of descent starts");
  bench->add_option("--seed", bench_seed, "start perturbation seed");
  bench->add_option("--mismatch", bench_mismatch, "evaluate on a shifted fleet");
  bench->add_flag("--abs-deviation", bench_abs, "absolute cost-deviation objective");
  bench->add_option("--out", bench_out, "output JSON");
  bench->add_option("--b", b, "cost-deviation weight");
  bench->add_option("--objective", objective, "max | lse");
  bench->add_option("--tau", tau, "smooth-peak temperature");
  bench->add_option("--p-min", p_min, "price lower bound");
  bench->add_option("--p-max", p_max, "price upper bound");
  bench->add_option("--l-max", l_max, "aggregate load cap, kW");

  // report
  auto* rep = app.add_subcommand("report", "summarize traces or raw peak/cost values");
  std::vector<std::string> rep_traces;
  int rep_window = 14;
  std::string rep_out;
  double rep_peak_ref = -1.0, rep_peak_bench = -1.0, rep_peak_ofo = -1.0;
  double rep_cost_ref = -1.0, rep_cost_bench = -1.0, rep_cost_ofo = -1.0;
  rep->add_option("--traces", rep_traces, "trace directories");
  rep->add_option("--window", rep_window, "trailing window length in days");
  rep->add_option("--out", rep_out, "summary CSV path");
  rep->add_option("--peak-ref", rep_peak_ref, "reference peak, kW");
  rep->add_option("--peak-benchmark", rep_peak_bench, "benchmark peak, kW");
  rep->add_option("--peak-ofo", rep_peak_ofo, "closed-loop peak, kW");
  rep->add_option("--cost-ref", rep_cost_ref, "reference last-day cost");
  rep->add_option("--cost-benchmark", rep_cost_bench, "benchmark last-day cost");
  rep->add_option("--cost-ofo", rep_cost_ofo, "closed-loop last-day cost");

  try {
    // Pre-scan for --config so file values become defaults before parsing.
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--config" && i + 1 < argc) apply_config(app, argv[i + 1]);
      if (a.rfind("--config=", 0) == 0) apply_config(app, a.substr(9));
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  if (threads < 1) {
    std::cerr << "error: --threads must be >= 1\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      const TimeGrid grid = make_time_grid(gen_steps, gen_minutes);
      const FleetScenario sc = generate_workplace_fleet(gen_evs, grid, gen_seed);
      const auto report = validate_scenario(sc, Bounds{});
      if (!report.ok()) {
        std::cerr << "error: generated scenario invalid: " << report.violations.front()
                  << '\n';
        return 2;
      }
      for (const auto& note : report.notes) std::cerr << "warning: " << note << '\n';
      fs::create_directories(gen_out);
      save_scenario(sc, fs::path(gen_out) / "scenario.json");
      save_series_csv(generate_reference_tariff(grid),
                      fs::path(gen_out) / "tariff.csv", "price");
      std::cout << "wrote " << (fs::path(gen_out) / "scenario.json").string() << " ("
                << sc.sessions.size() << " sessions)\n";
      return 0;
    }

    if (warm->parsed()) {
      const FleetScenario sc = load_checked_scenario(warm_scenario);
      const Vec p_ref = tariff_for(sc, warm_tariff);
      if (warm_sigma == 0.0)
        std::cerr << "warning: --sigma 0 gives no excitation; expect a zero matrix\n";
      const auto [dp, dl] =
          collect_warmstart_history(sc, p_ref, Bounds{}, warm_sigma, warm_days, warm_seed);
      const Mat h0 = warm_start(dp, dl, warm_ridge);
      save_matrix_csv(h0, warm_out);
      std::cout << "wrote " << warm_out << " (" << h0.rows() << "x" << h0.cols()
                << ")\n";
      return 0;
    }

    if (sim->parsed()) {
      FleetScenario sc = load_checked_scenario(sim_scenario);
      const Vec p_ref = tariff_for(sc, sim_tariff);
      if (sim_mismatch != 0) sc = apply_mismatch(sc, MismatchSpec{sim_mismatch});
      const DsoConfig cfg = make_dso_config(b, alpha0, schedule, sigma_u, tau,
                                            objective, p_min, p_max, l_max, no_mask);

      std::vector<RunTrace> traces;
      if (sim_method == "ofo") {
        const int n = sc.grid.steps_per_day;
        Mat h0 = Mat::Zero(n, n);
        if (!sim_h0.empty()) {
          h0 = load_matrix_csv(sim_h0);
          if (h0.rows() != n)
            throw UserError("--h0 dimension does not match the scenario grid");
        }
        OslConfig osl;
        osl.sigma_m = osl_sigma_m;
        osl.sigma_p = osl_sigma_p;
        osl.sigma0 = osl_sigma0;
        OfoOptions opts;
        opts.init_sigma = sim_init_sigma;
        opts.threads = threads;
        traces = run_experiment_suite(sc, p_ref, cfg, osl, h0, sim_days, sim_runs,
                                      sim_sigma_tilde,
                                      RunSeeds{sim_demand_seed, sim_control_seed}, opts);
      } else if (sim_method == "reference") {
        traces.push_back(run_fixed_price(sc, p_ref, cfg, p_ref, sim_days,
                                         sim_demand_seed, "reference", threads));
      } else if (sim_method == "fixed") {
        if (sim_price.empty()) throw UserError("--method fixed requires --price");
        Vec price = load_series_csv(sim_price);
        if (price.size() != sc.grid.steps_per_day)
          throw UserError("--price length does not match the scenario grid");
        traces.push_back(run_fixed_price(sc, price, cfg, p_ref, sim_days,
                                         sim_demand_seed, "benchmark", threads));
      } else {
        throw UserError("unknown --method '" + sim_method + "'");
      }

      fs::create_directories(sim_out);
      for (std::size_t r = 0; r < traces.size(); ++r)
        save_trace(traces[r], fs::path(sim_out) / ("run_" + std::to_string(r)));
      save_plot_data(traces, fs::path(sim_out) / "plot_data.csv");
      std::cout << "wrote " << traces.size() << " trace(s) under " << sim_out << '\n';
      return 0;
    }

    if (bench->parsed()) {
      FleetScenario sc = load_checked_scenario(bench_scenario);
      const Vec p_ref = tariff_for(sc, bench_tariff);
      if (bench_mismatch != 0) sc = apply_mismatch(sc, MismatchSpec{bench_mismatch});
      const DsoConfig cfg = make_dso_config(b, 5e-5, "constant", 0.0, tau, objective,
                                            p_min, p_max, l_max, false);
      BenchmarkOptions opts;
      opts.abs_deviation = bench_abs;
      opts.threads = threads;
      const BenchmarkResult res =
          solve_benchmark(sc, p_ref, cfg, bench_starts, bench_seed, opts);
      save_benchmark_result(res, bench_out);
      std::cout << "wrote " << bench_out << " (objective "
                << format_double(res.objective) << ", best start "
                << res.best_start_index << ")\n";
      return 0;
    }

    if (rep->parsed()) {
      ReportSummary sum;
      if (!rep_traces.empty()) {
        std::vector<RunTrace> traces;
        for (const auto& dir : rep_traces) {
          // Accept a trace directory itself or a simulate output directory
          // holding run_<i> subdirectories.
          if (fs::exists(fs::path(dir) / "meta.json")) {
            traces.push_back(load_trace(dir));
            continue;
          }
          bool found = false;
          for (int r = 0; fs::exists(fs::path(dir) / ("run_" + std::to_string(r)) /
                                     "meta.json");
               ++r) {
            traces.push_back(load_trace(fs::path(dir) / ("run_" + std::to_string(r))));
            found = true;
          }
          if (!found) throw IoError("report: no trace found under " + dir);
        }
        sum = compute_report(traces, rep_window);
      } else {
        sum.window_days = rep_window;
        if (rep_peak_ref > 0.0) sum.peak_ref = rep_peak_ref;
        if (rep_peak_bench > 0.0) sum.peak_bench = rep_peak_bench;
        if (rep_peak_ofo > 0.0) sum.peak_ofo = rep_peak_ofo;
        if (rep_cost_ref > 0.0) sum.cost_ref = rep_cost_ref;
        if (rep_cost_bench > 0.0) sum.cost_bench = rep_cost_bench;
        if (rep_cost_ofo > 0.0) sum.cost_ofo = rep_cost_ofo;
        if (sum.peak_ref && sum.peak_bench && sum.peak_ofo)
          sum.peaks =
              report_percentages(*sum.peak_ref, *sum.peak_bench, *sum.peak_ofo);
        if (sum.cost_ref && sum.cost_bench && sum.cost_ofo)
          sum.costs = cost_percentages(*sum.cost_ref, *sum.cost_bench, *sum.cost_ofo);
        if (!sum.peak_ref && !sum.cost_ref)
          throw UserError("report: pass --traces or raw --peak-*/--cost-* values");
      }
      print_report(sum);
      if (!rep_out.empty()) write_report_csv(sum, rep_out);
      return 0;
    }
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidDomain& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const WindowTooLong& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleAfterShift& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
