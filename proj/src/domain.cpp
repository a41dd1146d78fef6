#include "ofogrid/domain.hpp"

#include <cmath>

namespace ofogrid {

TimeGrid make_time_grid(int steps_per_day, int minutes_per_step)
{
  if (steps_per_day <= 0 || minutes_per_step <= 0)
    throw InvalidDomain("TimeGrid: counts must be positive");
  if (steps_per_day * minutes_per_step != 1440)
    throw InvalidDomain("TimeGrid: steps_per_day * minutes_per_step must equal 1440");
  return TimeGrid{steps_per_day, minutes_per_step};
}

PriceVector PriceVector::checked(Vec values, const TimeGrid& grid)
{
  if (values.size() != grid.steps_per_day)
    throw InvalidDomain("PriceVector: length does not match grid");
  if (!values.allFinite()) throw InvalidDomain("PriceVector: non-finite entry");
  return PriceVector{std::move(values)};
}

LoadProfile LoadProfile::checked(Vec values, const TimeGrid& grid)
{
  if (values.size() != grid.steps_per_day)
    throw InvalidDomain("LoadProfile: length does not match grid");
  if (!values.allFinite()) throw InvalidDomain("LoadProfile: non-finite entry");
  return LoadProfile{std::move(values)};
}

double EvSession::window_cap_sum() const
{
  double s = 0.0;
  for (int j = 0; j < availability.size(); ++j)
    if (availability[j] == 1) s += power_cap[j];
  return s;
}

std::vector<int> EvSession::window() const
{
  std::vector<int> w;
  for (int j = 0; j < availability.size(); ++j)
    if (availability[j] == 1) w.push_back(j);
  return w;
}

std::vector<std::string> validate_session(const EvSession& s, int n)
{
  std::vector<std::string> report;
  if (s.availability.size() != n) report.push_back("availability length mismatch");
  if (s.power_cap.size() != n) report.push_back("power_cap length mismatch");
  if (!report.empty()) return report;

  bool any_on = false;
  for (int j = 0; j < n; ++j) {
    if (s.availability[j] != 0 && s.availability[j] != 1) {
      report.push_back("availability entry not in {0,1}");
      break;
    }
    if (s.availability[j] == 1) any_on = true;
  }
  if (!s.power_cap.allFinite() || (s.power_cap.array() < 0.0).any())
    report.push_back("power_cap must be finite and nonnegative");
  if (!std::isfinite(s.demand) || s.demand < 0.0)
    report.push_back("demand must be finite and nonnegative");
  else {
    if (s.demand > 0.0 && !any_on) report.push_back("demand > 0 with empty window");
    if (report.empty() && s.demand > s.window_cap_sum() + 1e-12)
      report.push_back("demand exceeds window cap sum");
  }
  return report;
}

std::vector<std::string> validate_bounds(const Bounds& b)
{
  std::vector<std::string> report;
  if (!(b.p_min > 0.0 && b.p_min < b.p_max))
    report.push_back("bounds require 0 < p_min < p_max");
  if (!(b.l_max > 0.0)) report.push_back("bounds require l_max > 0");
  return report;
}

ValidationReport validate_scenario(const FleetScenario& scenario,
                                   const Bounds& bounds)
{
  ValidationReport report;
  report.violations = validate_bounds(bounds);
  const int n = scenario.grid.steps_per_day;
  if (scenario.grid.steps_per_day * scenario.grid.minutes_per_step != 1440)
    report.violations.push_back("grid does not cover 24 hours");

  double total_demand = 0.0;
  Vec total_cap = Vec::Zero(n);
  for (std::size_t i = 0; i < scenario.sessions.size(); ++i) {
    const auto& s = scenario.sessions[i];
    auto sr = validate_session(s, n);
    for (const auto& msg : sr) {
      if (msg == "demand exceeds window cap sum")
        report.violations.push_back("infeasible session " + std::to_string(i));
      else
        report.violations.push_back("session " + std::to_string(i) + ": " + msg);
    }
    if (sr.empty()) {
      total_demand += s.demand;
      for (int j = 0; j < n; ++j)
        if (s.availability[j] == 1) total_cap[j] += s.power_cap[j];
    }
  }
  if (total_demand > total_cap.sum() + 1e-9)
    report.violations.push_back("total fleet cap cannot satisfy total demand");
  if (scenario.sessions.empty()) report.notes.push_back("zero sessions");
  return report;
}

}  // namespace ofogrid
