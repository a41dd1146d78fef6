#ifndef OFOGRID_SIMKIT_HPP_
#define OFOGRID_SIMKIT_HPP_

#include "ofogrid/agent.hpp"
#include "ofogrid/controller.hpp"
#include "ofogrid/domain.hpp"
#include "ofogrid/sensitivity.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ofogrid {

struct WindowTooLong : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleAfterShift : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DayRecord {
  int day{0};
  Vec price;
  Vec l_agg;
  double objective{0.0};
  double peak_kw{0.0};
  double deviation_term{0.0};
  double daily_cost{0.0};          // p'l_agg
  double total_demand{0.0};        // sampled fleet demand, kW-intervals
  std::vector<std::string> flags;
};

struct RunSeeds {
  std::uint64_t demand{0};
  std::uint64_t control{0};
};

struct OslConfig {
  double sigma_m{100.0};
  double sigma_p{100.0};
  double sigma0{1000.0};
  CovarianceMode mode{CovarianceMode::Factored};
};

struct RunTrace {
  std::vector<DayRecord> records;
  std::string method;  // ofo | benchmark | reference
  RunSeeds seeds;
  DsoConfig config;
  OslConfig osl;
};

struct MismatchSpec {
  int shift_steps{1};
};

struct FleetGenParams {
  double arrival_mean_h{8.0};
  double arrival_std_h{1.0};
  double departure_mean_h{17.0};
  double departure_std_h{1.5};
  double earliest_h{6.0};
  double latest_h{24.0};
  double min_window_h{1.0};
  double power_cap_kw{11.0};
  double demand_min{8.0};   // kW-intervals
  double demand_max{40.0};
  double demand_cap_frac{0.85};  // demand clamp as fraction of window cap sum
  double demand_noise_sigma{0.1};
};

/// Synthetic workplace fleet: morning arrivals, afternoon departures, all
/// windows inside [06:00, 24:00). Deterministic for a fixed seed.
FleetScenario generate_workplace_fleet(int count, const TimeGrid& grid,
                                       std::uint64_t seed,
                                       const FleetGenParams& params = {});

/// Smooth two-peak daily tariff: base 0.12, morning peak 0.25 (07-09),
/// evening peak 0.28 (18-21), raised-cosine ramps of one hour.
Vec generate_reference_tariff(const TimeGrid& grid);

/// One day of multiplicative lognormal demand noise, clamped to feasibility.
Vec sample_daily_demands(const FleetScenario& scenario, Rng& rng);

struct OfoOptions {
  double init_sigma{0.01};  // day-1 initialization perturbation std
  Vec delta0;               // optional extra perturbation on p0 (empty = none)
  Vec delta1;
  int threads{1};
};

/// The full closed loop: two initialization days, then per day a Kalman
/// sensitivity update, event mask, gradient, and projected price step.
RunTrace run_ofo(const FleetScenario& scenario, const Vec& p_ref,
                 const DsoConfig& dso_config, const OslConfig& osl_config,
                 const Mat& H0, int days, const RunSeeds& seeds,
                 const OfoOptions& opts = {});

/// Day-by-day trace at a fixed price (reference tariff or an offline
/// benchmark price) with the same demand-noise stream as run_ofo.
RunTrace run_fixed_price(const FleetScenario& scenario, const Vec& price,
                         const DsoConfig& dso_config, const Vec& p_ref, int days,
                         std::uint64_t demand_seed, const std::string& method_tag,
                         int threads = 1);

/// Nominal run plus (n_runs-1) runs with extra N(0, sigma_tilde^2) offsets
/// on the two initialization prices.
std::vector<RunTrace> run_experiment_suite(const FleetScenario& scenario,
                                           const Vec& p_ref,
                                           const DsoConfig& dso_config,
                                           const OslConfig& osl_config, const Mat& H0,
                                           int days, int n_runs, double sigma_tilde,
                                           const RunSeeds& seeds,
                                           const OfoOptions& opts = {});

/// Circularly shift every availability window (caps in lockstep); demands
/// unchanged. Throws InfeasibleAfterShift when a session becomes unservable.
FleetScenario apply_mismatch(const FleetScenario& scenario, const MismatchSpec& spec);

struct ReportPercentages {
  double reduction_bench{0.0};  // (P_ref - P_bench) / P_ref
  double reduction_ofo{0.0};    // (P_ref - P_ofo) / P_ref
  double gap_to_bench{0.0};     // (P_ofo - P_bench) / P_bench
  double gap_over_baseline{0.0};  // (P_ofo - P_bench) / P_ref
};
ReportPercentages report_percentages(double peak_ref, double peak_bench,
                                     double peak_ofo);

struct CostPercentages {
  double ofo_saving{0.0};    // (C_ref - C_ofo) / C_ref
  double bench_saving{0.0};  // (C_ref - C_bench) / C_ref
  double ofo_vs_bench{0.0};  // (C_bench - C_ofo) / C_bench
};
CostPercentages cost_percentages(double cost_ref, double cost_bench, double cost_ofo);

struct ReportSummary {
  int window_days{0};
  std::optional<double> peak_ref, peak_bench, peak_ofo;
  std::optional<double> cost_ref, cost_bench, cost_ofo;  // last day
  std::optional<ReportPercentages> peaks;
  std::optional<CostPercentages> costs;
};

/// Last-window mean peaks per method (ofo traces averaged) plus the Table-1
/// style ratios when all three methods are present.
ReportSummary compute_report(const std::vector<RunTrace>& traces,
                             int window_days = 14);

}  // namespace ofogrid

#endif  // OFOGRID_SIMKIT_HPP_
