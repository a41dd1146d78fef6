#include "ofogrid/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace ofogrid {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

json vec_to_json(const Vec& v)
{
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a)
{
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

std::vector<std::string> split(const std::string& line, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s)
{
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw IoError("malformed number: '" + s + "'");
  }
}

}  // namespace

std::string format_double(double v)
{
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

void save_scenario(const FleetScenario& scenario, const std::filesystem::path& path)
{
  json doc;
  doc["grid"] = {{"steps_per_day", scenario.grid.steps_per_day},
                 {"minutes_per_step", scenario.grid.minutes_per_step}};
  doc["demand_noise"] = {{"family", scenario.demand_noise.family},
                         {"sigma", scenario.demand_noise.sigma},
                         {"seed", scenario.demand_noise.seed}};
  json sessions = json::array();
  for (const auto& s : scenario.sessions) {
    json availability = json::array();
    for (Eigen::Index j = 0; j < s.availability.size(); ++j)
      availability.push_back(s.availability[j]);
    sessions.push_back({{"availability", availability},
                        {"demand", s.demand},
                        {"power_cap", vec_to_json(s.power_cap)}});
  }
  doc["sessions"] = std::move(sessions);
  open_out(path) << doc.dump(2) << '\n';
}

FleetScenario load_scenario(const std::filesystem::path& path)
{
  json doc = json::parse(open_in(path));
  FleetScenario scenario;
  scenario.grid = make_time_grid(doc.at("grid").at("steps_per_day").get<int>(),
                                 doc.at("grid").at("minutes_per_step").get<int>());
  if (doc.contains("demand_noise")) {
    const auto& dn = doc.at("demand_noise");
    scenario.demand_noise.family = dn.value("family", "lognormal");
    scenario.demand_noise.sigma = dn.value("sigma", 0.1);
    scenario.demand_noise.seed = dn.value("seed", std::uint64_t{0});
  }
  for (const auto& js : doc.at("sessions")) {
    EvSession s;
    const auto& avail = js.at("availability");
    s.availability = IVec(avail.size());
    for (std::size_t j = 0; j < avail.size(); ++j)
      s.availability[static_cast<Eigen::Index>(j)] = avail[j].get<int>();
    s.demand = js.at("demand").get<double>();
    s.power_cap = vec_from_json(js.at("power_cap"));
    const auto report = validate_session(s, scenario.grid.steps_per_day);
    if (!report.empty())
      throw IoError("invalid session in " + path.string() + ": " + report.front());
    scenario.sessions.push_back(std::move(s));
  }
  return scenario;
}

FleetScenario load_sessions_csv(const std::filesystem::path& path,
                                const TimeGrid& grid)
{
  auto in = open_in(path);
  FleetScenario scenario;
  scenario.grid = grid;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4)
      throw IoError("sessions csv: expected start_step,end_step,demand,power_cap");
    const int start = static_cast<int>(parse_double(cols[0]));
    const int end = static_cast<int>(parse_double(cols[1]));
    EvSession s;
    s.availability = IVec::Zero(grid.steps_per_day);
    s.power_cap = Vec::Zero(grid.steps_per_day);
    if (start < 0 || end > grid.steps_per_day || end <= start)
      throw IoError("sessions csv: bad window [" + cols[0] + ", " + cols[1] + ")");
    const double cap = parse_double(cols[3]);
    for (int j = start; j < end; ++j) {
      s.availability[j] = 1;
      s.power_cap[j] = cap;
    }
    s.demand = parse_double(cols[2]);
    scenario.sessions.push_back(std::move(s));
  }
  return scenario;
}

void save_matrix_csv(const Mat& h, const std::filesystem::path& path,
                     const std::string& mode)
{
  auto out = open_out(path);
  out << h.rows() << ',' << mode << '\n';
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j)
      out << (j ? "," : "") << format_double(h(i, j));
    out << '\n';
  }
}

Mat load_matrix_csv(const std::filesystem::path& path)
{
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("matrix csv: missing header");
  const auto head = split(line, ',');
  const int n = static_cast<int>(parse_double(head.at(0)));
  Mat h(n, n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw IoError("matrix csv: truncated");
    const auto cols = split(line, ',');
    if (static_cast<int>(cols.size()) != n) throw IoError("matrix csv: bad row width");
    for (int j = 0; j < n; ++j) h(i, j) = parse_double(cols[j]);
  }
  return h;
}

void save_series_csv(const Vec& v, const std::filesystem::path& path,
                     const std::string& column_name)
{
  auto out = open_out(path);
  out << "step," << column_name << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out << i << ',' << format_double(v[i]) << '\n';
}

Vec load_series_csv(const std::filesystem::path& path)
{
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    vals.push_back(parse_double(cols.at(1)));
  }
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

namespace {

void save_rows_csv(const std::vector<Vec>& rows, const std::filesystem::path& path)
{
  auto out = open_out(path);
  out << "day";
  if (!rows.empty())
    for (Eigen::Index j = 0; j < rows.front().size(); ++j) out << ",s" << j;
  out << '\n';
  for (std::size_t d = 0; d < rows.size(); ++d) {
    out << d;
    for (Eigen::Index j = 0; j < rows[d].size(); ++j)
      out << ',' << format_double(rows[d][j]);
    out << '\n';
  }
}

std::vector<Vec> load_rows_csv(const std::filesystem::path& path)
{
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<Vec> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    Vec v(static_cast<Eigen::Index>(cols.size()) - 1);
    for (std::size_t j = 1; j < cols.size(); ++j)
      v[static_cast<Eigen::Index>(j - 1)] = parse_double(cols[j]);
    rows.push_back(std::move(v));
  }
  return rows;
}

}  // namespace

void save_trace(const RunTrace& trace, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);

  json meta;
  meta["method"] = trace.method;
  meta["days"] = trace.records.size();
  meta["seeds"] = {{"demand", trace.seeds.demand}, {"control", trace.seeds.control}};
  meta["config"] = {
      {"b", trace.config.b},
      {"p_min", trace.config.bounds.p_min},
      {"p_max", trace.config.bounds.p_max},
      {"l_max", trace.config.bounds.l_max},
      {"alpha0", trace.config.alpha.alpha0},
      {"alpha_schedule",
       trace.config.alpha.kind == StepSchedule::Kind::Constant ? "constant" : "decay"},
      {"sigma_u", trace.config.sigma_u},
      {"tau", trace.config.tau},
      {"objective_mode",
       trace.config.objective_mode == ObjectiveMode::Max ? "max" : "lse"},
      {"mask_enabled", trace.config.mask_enabled},
  };
  meta["osl"] = {{"sigma_m", trace.osl.sigma_m},
                 {"sigma_p", trace.osl.sigma_p},
                 {"sigma0", trace.osl.sigma0},
                 {"mode", trace.osl.mode == CovarianceMode::Factored ? "factored" : "full"}};
  open_out(dir / "meta.json") << meta.dump(2) << '\n';

  {
    auto out = open_out(dir / "records.csv");
    out << "day,peak_kw,objective,deviation,daily_cost,total_demand,qp_flag,flags\n";
    for (const auto& r : trace.records) {
      std::string flags;
      bool qp_flag = false;
      for (const auto& f : r.flags) {
        qp_flag = qp_flag || f == "qp_no_convergence";
        flags += (flags.empty() ? "" : ";") + f;
      }
      out << r.day << ',' << format_double(r.peak_kw) << ','
          << format_double(r.objective) << ',' << format_double(r.deviation_term)
          << ',' << format_double(r.daily_cost) << ','
          << format_double(r.total_demand) << ',' << (qp_flag ? 1 : 0) << ','
          << flags << '\n';
    }
  }

  std::vector<Vec> prices, loads;
  for (const auto& r : trace.records) {
    prices.push_back(r.price);
    loads.push_back(r.l_agg);
  }
  save_rows_csv(prices, dir / "prices.csv");
  save_rows_csv(loads, dir / "loads.csv");
}

RunTrace load_trace(const std::filesystem::path& dir)
{
  RunTrace trace;
  json meta = json::parse(open_in(dir / "meta.json"));
  trace.method = meta.at("method").get<std::string>();
  trace.seeds.demand = meta.at("seeds").at("demand").get<std::uint64_t>();
  trace.seeds.control = meta.at("seeds").at("control").get<std::uint64_t>();
  const auto& cfg = meta.at("config");
  trace.config.b = cfg.at("b").get<double>();
  trace.config.bounds = Bounds{cfg.at("p_min").get<double>(),
                               cfg.at("p_max").get<double>(),
                               cfg.at("l_max").get<double>()};
  trace.config.alpha.alpha0 = cfg.at("alpha0").get<double>();
  trace.config.alpha.kind = cfg.at("alpha_schedule").get<std::string>() == "constant"
                                ? StepSchedule::Kind::Constant
                                : StepSchedule::Kind::Decay;
  trace.config.sigma_u = cfg.at("sigma_u").get<double>();
  trace.config.tau = cfg.at("tau").get<double>();
  trace.config.objective_mode = cfg.at("objective_mode").get<std::string>() == "max"
                                    ? ObjectiveMode::Max
                                    : ObjectiveMode::Lse;
  trace.config.mask_enabled = cfg.at("mask_enabled").get<bool>();
  const auto& osl = meta.at("osl");
  trace.osl.sigma_m = osl.at("sigma_m").get<double>();
  trace.osl.sigma_p = osl.at("sigma_p").get<double>();
  trace.osl.sigma0 = osl.at("sigma0").get<double>();
  trace.osl.mode = osl.at("mode").get<std::string>() == "factored"
                       ? CovarianceMode::Factored
                       : CovarianceMode::Full;

  const auto prices = load_rows_csv(dir / "prices.csv");
  const auto loads = load_rows_csv(dir / "loads.csv");

  auto in = open_in(dir / "records.csv");
  std::string line;
  std::getline(in, line);  // header
  std::size_t d = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    DayRecord r;
    r.day = static_cast<int>(parse_double(cols.at(0)));
    r.peak_kw = parse_double(cols.at(1));
    r.objective = parse_double(cols.at(2));
    r.deviation_term = parse_double(cols.at(3));
    r.daily_cost = parse_double(cols.at(4));
    r.total_demand = parse_double(cols.at(5));
    if (cols.size() > 7 && !cols[7].empty())
      for (const auto& f : split(cols[7], ';')) r.flags.push_back(f);
    if (d < prices.size()) r.price = prices[d];
    if (d < loads.size()) r.l_agg = loads[d];
    trace.records.push_back(std::move(r));
    ++d;
  }
  return trace;
}

void save_benchmark_result(const BenchmarkResult& result,
                           const std::filesystem::path& path)
{
  json doc;
  doc["price"] = vec_to_json(result.price);
  doc["predicted_load"] = vec_to_json(result.predicted_load);
  doc["objective"] = result.objective;
  doc["starts"] = result.starts;
  doc["best_start_index"] = result.best_start_index;
  doc["start_converged"] = result.start_converged;
  open_out(path) << doc.dump(2) << '\n';
}

BenchmarkResult load_benchmark_result(const std::filesystem::path& path)
{
  json doc = json::parse(open_in(path));
  BenchmarkResult result;
  result.price = vec_from_json(doc.at("price"));
  result.predicted_load = vec_from_json(doc.at("predicted_load"));
  result.objective = doc.at("objective").get<double>();
  result.starts = doc.at("starts").get<int>();
  result.best_start_index = doc.at("best_start_index").get<int>();
  result.start_converged = doc.at("start_converged").get<std::vector<bool>>();
  return result;
}

void save_plot_data(const std::vector<RunTrace>& traces,
                    const std::filesystem::path& path)
{
  auto out = open_out(path);
  out << "day,method,run,peak_kw,objective,deviation,daily_cost\n";
  for (std::size_t t = 0; t < traces.size(); ++t)
    for (const auto& r : traces[t].records)
      out << r.day << ',' << traces[t].method << ',' << t << ','
          << format_double(r.peak_kw) << ',' << format_double(r.objective) << ','
          << format_double(r.deviation_term) << ',' << format_double(r.daily_cost)
          << '\n';
}

}  // namespace ofogrid
