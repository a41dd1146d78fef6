#ifndef OFOGRID_DOMAIN_HPP_
#define OFOGRID_DOMAIN_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ofogrid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

struct InvalidDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleSession : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed daily discretization; steps_per_day * minutes_per_step must cover
/// exactly 24 hours.
struct TimeGrid {
  int steps_per_day{96};
  int minutes_per_step{15};

  [[nodiscard]] int n() const { return steps_per_day; }
  /// Step index of a wall-clock hour (fractional hours allowed).
  [[nodiscard]] int step_of_hour(double hour) const
  {
    return static_cast<int>(hour * 60.0 / minutes_per_step);
  }
};

TimeGrid make_time_grid(int steps_per_day, int minutes_per_step);

/// Per-interval tariff, currency per kW-interval.
struct PriceVector {
  Vec v;
  static PriceVector checked(Vec values, const TimeGrid& grid);
};

/// Per-interval power, kW.
struct LoadProfile {
  Vec v;
  static LoadProfile checked(Vec values, const TimeGrid& grid);
};

/// One EV charging session: availability window, energy demand in
/// kW-intervals, per-interval power cap in kW.
struct EvSession {
  IVec availability;  // entries in {0,1}
  double demand{0.0};
  Vec power_cap;

  [[nodiscard]] double window_cap_sum() const;
  [[nodiscard]] std::vector<int> window() const;
};

std::vector<std::string> validate_session(const EvSession& s, int n);

struct DemandNoise {
  std::string family{"lognormal"};
  double sigma{0.1};
  std::uint64_t seed{0};
};

struct FleetScenario {
  std::vector<EvSession> sessions;
  TimeGrid grid;
  DemandNoise demand_noise;
};

struct Bounds {
  double p_min{0.001};
  double p_max{1.0};
  double l_max{750.0};
};

std::vector<std::string> validate_bounds(const Bounds& b);

/// Report-style validation result: violations make the scenario invalid,
/// notes are informational only.
struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Returns the list of violated invariants (empty = valid). Pure function
/// of its inputs.
ValidationReport validate_scenario(const FleetScenario& scenario,
                                   const Bounds& bounds);

/// Demand is carried in kW-intervals so the window-sum constraint holds
/// without a time factor; convert for reporting.
inline double kw_intervals_to_kwh(double d, const TimeGrid& g)
{
  return d * g.minutes_per_step / 60.0;
}

}  // namespace ofogrid

#endif  // OFOGRID_DOMAIN_HPP_
