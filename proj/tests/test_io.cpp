#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ofogrid/io.hpp"
#include "ofogrid/random.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace ofogrid;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir()
  {
    path = fs::temp_directory_path() /
           ("ofogrid_io_" + std::to_string(std::rand()) + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scenario JSON round trip")
{
  TempDir tmp;
  const TimeGrid g = make_time_grid(24, 60);
  FleetScenario sc = generate_workplace_fleet(12, g, 42);
  sc.demand_noise.sigma = 0.07;
  sc.demand_noise.seed = 9;

  const auto file = tmp.path / "scenario.json";
  save_scenario(sc, file);
  const FleetScenario back = load_scenario(file);

  CHECK(back.grid.steps_per_day == 24);
  CHECK(back.demand_noise.sigma == doctest::Approx(0.07));
  CHECK(back.demand_noise.seed == 9);
  REQUIRE(back.sessions.size() == sc.sessions.size());
  for (std::size_t i = 0; i < sc.sessions.size(); ++i) {
    CHECK(back.sessions[i].demand == sc.sessions[i].demand);
    CHECK((back.sessions[i].availability - sc.sessions[i].availability).norm() == 0);
    CHECK((back.sessions[i].power_cap - sc.sessions[i].power_cap).norm() == 0.0);
  }
}

TEST_CASE("loading a corrupt or missing scenario throws")
{
  TempDir tmp;
  CHECK_THROWS_AS(load_scenario(tmp.path / "missing.json"), IoError);

  const auto bad = tmp.path / "bad.json";
  std::ofstream(bad) << "{\"grid\": {\"steps_per_day\": 24, \"minutes_per_step\": 60},"
                        "\"sessions\": [{\"availability\": [1, 2], \"demand\": 1.0,"
                        "\"power_cap\": [1.0, 1.0]}]}";
  CHECK_THROWS_AS(load_scenario(bad), IoError);
}

TEST_CASE("sessions CSV loader")
{
  TempDir tmp;
  const auto file = tmp.path / "sessions.csv";
  std::ofstream(file) << "start_step,end_step,demand,power_cap\n"
                         "8,12,10.5,11\n"
                         "4,20,30,7.5\n";
  const TimeGrid g = make_time_grid(24, 60);
  const FleetScenario sc = load_sessions_csv(file, g);
  REQUIRE(sc.sessions.size() == 2);
  CHECK(sc.sessions[0].demand == doctest::Approx(10.5));
  CHECK(sc.sessions[0].window().size() == 4);
  CHECK(sc.sessions[1].power_cap[4] == doctest::Approx(7.5));

  const auto bad = tmp.path / "bad.csv";
  std::ofstream(bad) << "start_step,end_step,demand,power_cap\n12,8,10,11\n";
  CHECK_THROWS_AS(load_sessions_csv(bad, g), IoError);
}

TEST_CASE("matrix CSV round trip is bit exact")
{
  TempDir tmp;
  Rng rng(7);
  const int n = 9;
  Mat h(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) h(r, c) = rng.normal(0.0, 3.0);
  h(0, 0) = 1.0 / 3.0;  // not exactly representable in decimal

  const auto file = tmp.path / "h.csv";
  save_matrix_csv(h, file);
  const Mat back = load_matrix_csv(file);
  CHECK((back - h).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("series CSV round trip")
{
  TempDir tmp;
  Rng rng(8);
  const Vec v = rng.normal_vector(96, 0.2);
  const auto file = tmp.path / "tariff.csv";
  save_series_csv(v, file, "price");
  const Vec back = load_series_csv(file);
  REQUIRE(back.size() == 96);
  CHECK((back - v).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("trace round trip preserves metadata, records, and flags")
{
  TempDir tmp;
  RunTrace trace;
  trace.method = "ofo";
  trace.seeds = RunSeeds{11, 22};
  trace.config.alpha.kind = StepSchedule::Kind::Decay;
  trace.config.alpha.alpha0 = 3e-4;
  trace.config.objective_mode = ObjectiveMode::Lse;
  trace.config.sigma_u = 0.004;
  trace.osl.mode = CovarianceMode::Full;
  trace.osl.sigma0 = 500.0;

  Rng rng(9);
  for (int d = 0; d < 5; ++d) {
    DayRecord r;
    r.day = d;
    r.price = rng.normal_vector(6, 0.1);
    r.l_agg = rng.normal_vector(6, 10.0).cwiseAbs();
    r.objective = rng.normal(100.0, 5.0);
    r.peak_kw = r.l_agg.maxCoeff();
    r.deviation_term = rng.uniform();
    r.daily_cost = rng.normal(1000.0, 10.0);
    r.total_demand = r.l_agg.sum();
    if (d == 3) {
      r.flags = {"qp_no_convergence", "l_max_exceeded"};
    }
    trace.records.push_back(std::move(r));
  }

  const auto dir = tmp.path / "trace";
  save_trace(trace, dir);
  const RunTrace back = load_trace(dir);

  CHECK(back.method == "ofo");
  CHECK(back.seeds.demand == 11);
  CHECK(back.seeds.control == 22);
  CHECK(back.config.alpha.kind == StepSchedule::Kind::Decay);
  CHECK(back.config.alpha.alpha0 == 3e-4);
  CHECK(back.config.objective_mode == ObjectiveMode::Lse);
  CHECK(back.config.sigma_u == 0.004);
  CHECK(back.osl.mode == CovarianceMode::Full);
  CHECK(back.osl.sigma0 == 500.0);

  REQUIRE(back.records.size() == 5);
  for (int d = 0; d < 5; ++d) {
    CHECK((back.records[d].price - trace.records[d].price).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((back.records[d].l_agg - trace.records[d].l_agg).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK(back.records[d].objective == trace.records[d].objective);
    CHECK(back.records[d].daily_cost == trace.records[d].daily_cost);
    CHECK(back.records[d].flags == trace.records[d].flags);
  }
}

TEST_CASE("benchmark result round trip")
{
  TempDir tmp;
  BenchmarkResult res;
  Rng rng(10);
  res.price = rng.normal_vector(8, 0.2);
  res.predicted_load = rng.normal_vector(8, 30.0).cwiseAbs();
  res.objective = 123.456789012345678;
  res.starts = 4;
  res.best_start_index = 2;
  res.start_converged = {true, false, true, true};

  const auto file = tmp.path / "bench.json";
  save_benchmark_result(res, file);
  const BenchmarkResult back = load_benchmark_result(file);
  CHECK((back.price - res.price).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.predicted_load - res.predicted_load).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(back.objective == res.objective);
  CHECK(back.starts == 4);
  CHECK(back.best_start_index == 2);
  CHECK(back.start_converged == res.start_converged);
}

TEST_CASE("plot data export is tidy")
{
  TempDir tmp;
  RunTrace a, b;
  a.method = "reference";
  b.method = "ofo";
  for (int d = 0; d < 3; ++d) {
    DayRecord r;
    r.day = d;
    r.peak_kw = 100.0 + d;
    a.records.push_back(r);
    r.peak_kw = 90.0 + d;
    b.records.push_back(r);
  }
  const auto file = tmp.path / "plot.csv";
  save_plot_data({a, b}, file);

  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "day,method,run,peak_kw,objective,deviation,daily_cost");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("repeated saves are byte identical")
{
  TempDir tmp;
  Rng rng(11);
  Mat h(5, 5);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) h(r, c) = rng.normal(0.0, 1.0);
  save_matrix_csv(h, tmp.path / "a.csv");
  save_matrix_csv(h, tmp.path / "b.csv");

  std::ifstream fa(tmp.path / "a.csv"), fb(tmp.path / "b.csv");
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}
