#include "ofogrid/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ofogrid {

FleetScenario generate_workplace_fleet(int count, const TimeGrid& grid,
                                       std::uint64_t seed,
                                       const FleetGenParams& params)
{
  if (count < 0) throw InvalidDomain("generate_workplace_fleet: count must be >= 0");
  const int n = grid.steps_per_day;

  FleetScenario scenario;
  scenario.grid = grid;
  scenario.demand_noise = DemandNoise{"lognormal", params.demand_noise_sigma, seed};
  scenario.sessions.reserve(static_cast<std::size_t>(count));

  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    double arr_h = rng.normal(params.arrival_mean_h, params.arrival_std_h);
    double dep_h = rng.normal(params.departure_mean_h, params.departure_std_h);
    arr_h = std::clamp(arr_h, params.earliest_h, params.latest_h - params.min_window_h);
    dep_h = std::clamp(dep_h, arr_h + params.min_window_h, params.latest_h);

    int arr_step = std::clamp(grid.step_of_hour(arr_h), 0, n - 1);
    int dep_step = std::clamp(grid.step_of_hour(dep_h), arr_step + 1, n);

    EvSession s;
    s.availability = IVec::Zero(n);
    s.power_cap = Vec::Zero(n);
    for (int j = arr_step; j < dep_step; ++j) {
      s.availability[j] = 1;
      s.power_cap[j] = params.power_cap_kw;
    }
    const double cap_sum = s.window_cap_sum();
    double d = rng.uniform(params.demand_min, params.demand_max);
    // Margin keeps the session feasible under demand noise and window shifts.
    d = std::min(d, params.demand_cap_frac * cap_sum);
    s.demand = d;
    scenario.sessions.push_back(std::move(s));
  }
  return scenario;
}

Vec generate_reference_tariff(const TimeGrid& grid)
{
  const int n = grid.steps_per_day;
  const double base = 0.12;

  // Raised-cosine bump: 0 outside [a-1, b+1], 1 on the plateau [a, b].
  auto bump = [](double t, double a, double b) {
    if (t <= a - 1.0 || t >= b + 1.0) return 0.0;
    if (t < a) return 0.5 - 0.5 * std::cos(M_PI * (t - (a - 1.0)));
    if (t <= b) return 1.0;
    return 0.5 - 0.5 * std::cos(M_PI * (b + 1.0 - t));
  };

  Vec p(n);
  for (int i = 0; i < n; ++i) {
    const double t = i * grid.minutes_per_step / 60.0;
    p[i] = base + (0.25 - base) * bump(t, 7.0, 9.0) + (0.28 - base) * bump(t, 18.0, 21.0);
  }
  return p;
}

Vec sample_daily_demands(const FleetScenario& scenario, Rng& rng)
{
  const auto m = static_cast<Eigen::Index>(scenario.sessions.size());
  Vec d(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& s = scenario.sessions[static_cast<std::size_t>(i)];
    double v = s.demand;
    if (scenario.demand_noise.family == "lognormal" && scenario.demand_noise.sigma > 0.0)
      v *= rng.lognormal(scenario.demand_noise.sigma);
    d[i] = std::min(v, s.window_cap_sum());
  }
  return d;
}

namespace {

DayRecord make_record(int day, const Vec& p, const Vec& l, double total_demand,
                      const DsoConfig& cfg, const Vec& p_ref)
{
  DayRecord rec;
  rec.day = day;
  rec.price = p;
  rec.l_agg = l;
  const ObjectiveValue obj = dso_objective(p, l, cfg, p_ref);
  rec.objective = obj.value;
  rec.peak_kw = l.maxCoeff();
  rec.deviation_term = obj.deviation_term;
  rec.daily_cost = p.dot(l);
  rec.total_demand = total_demand;
  if (rec.peak_kw > cfg.bounds.l_max) rec.flags.push_back("l_max_exceeded");
  return rec;
}

}  // namespace

RunTrace run_ofo(const FleetScenario& scenario, const Vec& p_ref,
                 const DsoConfig& dso_config, const OslConfig& osl_config,
                 const Mat& H0, int days, const RunSeeds& seeds,
                 const OfoOptions& opts)
{
  if (days < 2) throw InvalidDomain("run_ofo: need at least two initialization days");
  const int n = scenario.grid.steps_per_day;
  const Bounds& b = dso_config.bounds;

  Rng demand_rng(seeds.demand);
  Rng control_rng(seeds.control);

  auto clip = [&](const Vec& p) { return p.cwiseMax(b.p_min).cwiseMin(b.p_max).eval(); };

  Vec p0 = p_ref;
  if (opts.delta0.size() == n) p0 += opts.delta0;
  p0 = clip(p0);
  Vec p1 = p_ref + control_rng.normal_vector(n, opts.init_sigma);
  if (opts.delta1.size() == n) p1 += opts.delta1;
  p1 = clip(p1);

  SensitivityEstimate est(H0, osl_config.sigma0, osl_config.sigma_m,
                          osl_config.sigma_p, osl_config.mode);

  RunTrace trace;
  trace.method = "ofo";
  trace.seeds = seeds;
  trace.config = dso_config;
  trace.osl = osl_config;
  trace.records.reserve(static_cast<std::size_t>(days));

  std::vector<Vec> prices, loads;
  for (int d = 0; d < days; ++d) {
    Vec p;
    std::vector<std::string> step_flags;
    if (d == 0) {
      p = p0;
    } else if (d == 1) {
      p = p1;
    } else {
      est = kalman_update(est, prices[d - 1] - prices[d - 2],
                          loads[d - 1] - loads[d - 2]);
      const DsoGradient grad =
          dso_gradient(prices[d - 1], loads[d - 1], dso_config, p_ref);
      IVec mask = dso_config.mask_enabled ? event_mask(loads[d - 1])
                                          : IVec::Ones(n);
      const double alpha = step_size(dso_config.alpha, d - 2);
      const LopResult lop = lop_step(prices[d - 1], loads[d - 1], est.H(), grad,
                                     dso_config, alpha, mask, control_rng);
      if (!lop.qp_converged) {
        step_flags.push_back("qp_no_convergence");
        p = prices[d - 1];  // failed controller day: reuse the previous price
      } else {
        p = lop.p_next;
      }
      if (lop.softened) step_flags.push_back("load_constraint_softened");
    }

    const Vec demands = sample_daily_demands(scenario, demand_rng);
    const Vec l = fleet_response_with_demands(p, scenario, demands,
                                              AgentMode::Exact, opts.threads);
    DayRecord rec = make_record(d, p, l, demands.sum(), dso_config, p_ref);
    for (auto& f : step_flags) rec.flags.push_back(f);
    trace.records.push_back(std::move(rec));
    prices.push_back(p);
    loads.push_back(l);
  }
  return trace;
}

RunTrace run_fixed_price(const FleetScenario& scenario, const Vec& price,
                         const DsoConfig& dso_config, const Vec& p_ref, int days,
                         std::uint64_t demand_seed, const std::string& method_tag,
                         int threads)
{
  Rng demand_rng(demand_seed);
  RunTrace trace;
  trace.method = method_tag;
  trace.seeds.demand = demand_seed;
  trace.config = dso_config;
  for (int d = 0; d < days; ++d) {
    const Vec demands = sample_daily_demands(scenario, demand_rng);
    const Vec l = fleet_response_with_demands(price, scenario, demands,
                                              AgentMode::Exact, threads);
    trace.records.push_back(
        make_record(d, price, l, demands.sum(), dso_config, p_ref));
  }
  return trace;
}

std::vector<RunTrace> run_experiment_suite(const FleetScenario& scenario,
                                           const Vec& p_ref,
                                           const DsoConfig& dso_config,
                                           const OslConfig& osl_config, const Mat& H0,
                                           int days, int n_runs, double sigma_tilde,
                                           const RunSeeds& seeds,
                                           const OfoOptions& opts)
{
  if (n_runs < 1) throw InvalidDomain("run_experiment_suite: n_runs must be >= 1");
  const int n = scenario.grid.steps_per_day;

  std::vector<RunTrace> traces;
  traces.reserve(static_cast<std::size_t>(n_runs));
  for (int r = 0; r < n_runs; ++r) {
    OfoOptions run_opts = opts;
    if (r > 0) {
      Rng delta_rng(derive_seed(seeds.control, 100 + static_cast<std::uint64_t>(r)));
      run_opts.delta0 = delta_rng.normal_vector(n, sigma_tilde);
      run_opts.delta1 = delta_rng.normal_vector(n, sigma_tilde);
    }
    traces.push_back(run_ofo(scenario, p_ref, dso_config, osl_config, H0, days,
                             seeds, run_opts));
  }
  return traces;
}

FleetScenario apply_mismatch(const FleetScenario& scenario, const MismatchSpec& spec)
{
  const int n = scenario.grid.steps_per_day;
  if (std::abs(spec.shift_steps) >= n)
    throw InvalidDomain("apply_mismatch: |shift_steps| must be < n");

  FleetScenario shifted = scenario;
  const int s = ((spec.shift_steps % n) + n) % n;
  for (auto& session : shifted.sessions) {
    IVec avail = IVec::Zero(n);
    Vec cap = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      avail[(j + s) % n] = session.availability[j];
      cap[(j + s) % n] = session.power_cap[j];
    }
    session.availability = std::move(avail);
    session.power_cap = std::move(cap);
  }
  const auto report = validate_scenario(shifted, Bounds{});
  if (!report.ok())
    throw InfeasibleAfterShift("apply_mismatch: " + report.violations.front());
  return shifted;
}

ReportPercentages report_percentages(double peak_ref, double peak_bench,
                                     double peak_ofo)
{
  ReportPercentages r;
  r.reduction_bench = (peak_ref - peak_bench) / peak_ref;
  r.reduction_ofo = (peak_ref - peak_ofo) / peak_ref;
  r.gap_to_bench = (peak_ofo - peak_bench) / peak_bench;
  r.gap_over_baseline = (peak_ofo - peak_bench) / peak_ref;
  return r;
}

CostPercentages cost_percentages(double cost_ref, double cost_bench, double cost_ofo)
{
  CostPercentages c;
  c.ofo_saving = (cost_ref - cost_ofo) / cost_ref;
  c.bench_saving = (cost_ref - cost_bench) / cost_ref;
  c.ofo_vs_bench = (cost_bench - cost_ofo) / cost_bench;
  return c;
}

ReportSummary compute_report(const std::vector<RunTrace>& traces, int window_days)
{
  if (traces.empty()) throw InvalidDomain("compute_report: no traces");
  ReportSummary summary;
  summary.window_days = window_days;

  auto last_window_mean_peak = [&](const RunTrace& t) {
    if (window_days > static_cast<int>(t.records.size()))
      throw WindowTooLong("compute_report: window exceeds trace length");
    double acc = 0.0;
    for (std::size_t i = t.records.size() - window_days; i < t.records.size(); ++i)
      acc += t.records[i].peak_kw;
    return acc / window_days;
  };

  double ofo_acc = 0.0, ofo_cost_acc = 0.0;
  int ofo_count = 0;
  for (const auto& t : traces) {
    const double peak = last_window_mean_peak(t);
    const double last_cost = t.records.back().daily_cost;
    if (t.method == "ofo") {
      ofo_acc += peak;
      ofo_cost_acc += last_cost;
      ++ofo_count;
    } else if (t.method == "benchmark") {
      summary.peak_bench = peak;
      summary.cost_bench = last_cost;
    } else if (t.method == "reference") {
      summary.peak_ref = peak;
      summary.cost_ref = last_cost;
    }
  }
  if (ofo_count > 0) {
    summary.peak_ofo = ofo_acc / ofo_count;
    summary.cost_ofo = ofo_cost_acc / ofo_count;
  }
  if (summary.peak_ref && summary.peak_bench && summary.peak_ofo)
    summary.peaks =
        report_percentages(*summary.peak_ref, *summary.peak_bench, *summary.peak_ofo);
  if (summary.cost_ref && summary.cost_bench && summary.cost_ofo)
    summary.costs =
        cost_percentages(*summary.cost_ref, *summary.cost_bench, *summary.cost_ofo);
  return summary;
}

}  // namespace ofogrid
