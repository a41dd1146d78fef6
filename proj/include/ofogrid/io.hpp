#ifndef OFOGRID_IO_HPP_
#define OFOGRID_IO_HPP_

#include "ofogrid/benchmark.hpp"
#include "ofogrid/simkit.hpp"

#include <filesystem>
#include <string>

namespace ofogrid {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario persistence: one JSON document
// {grid, sessions[{availability, demand, power_cap}], demand_noise}.
void save_scenario(const FleetScenario& scenario, const std::filesystem::path& path);
FleetScenario load_scenario(const std::filesystem::path& path);

/// CSV session loader: header start_step,end_step,demand,power_cap, one
/// session per row, availability given as a [start, end) step pair.
FleetScenario load_sessions_csv(const std::filesystem::path& path,
                                const TimeGrid& grid);

// Sensitivity matrices: row-major CSV with a one-line "n,mode" header.
void save_matrix_csv(const Mat& h, const std::filesystem::path& path,
                     const std::string& mode = "factored");
Mat load_matrix_csv(const std::filesystem::path& path);

// Single per-interval series (e.g. the reference tariff), one value per line
// after a header.
void save_series_csv(const Vec& v, const std::filesystem::path& path,
                     const std::string& column_name);
Vec load_series_csv(const std::filesystem::path& path);

/// RunTrace persistence: meta.json + records.csv + prices.csv + loads.csv
/// inside `dir` (created if needed). Floats at 17 significant digits.
void save_trace(const RunTrace& trace, const std::filesystem::path& dir);
RunTrace load_trace(const std::filesystem::path& dir);

void save_benchmark_result(const BenchmarkResult& result,
                           const std::filesystem::path& path);
BenchmarkResult load_benchmark_result(const std::filesystem::path& path);

/// Tidy per-day plot data (day, method, peak_kw, objective, deviation,
/// daily_cost) for external plotting tools.
void save_plot_data(const std::vector<RunTrace>& traces,
                    const std::filesystem::path& path);

std::string format_double(double v);  // 17 significant digits

}  // namespace ofogrid

#endif  // OFOGRID_IO_HPP_
