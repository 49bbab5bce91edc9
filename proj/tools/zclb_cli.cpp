// Command-line driver: simulate / filter / calibrate / price / survival.

#include <array>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zclb/zclb.hpp"

namespace {

using nlohmann::json;

std::string fmt12(double v) { return zclb::detail::fmt12(v); }

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    zclb::atomic_write_file(out_path, content);
}

// Model parameters from --params JSON plus per-field flag overrides. When
// zeta2 is never mentioned it follows zeta1 (pure one-factor configuration).
struct ParamCli {
  std::string params_file;
  std::array<double, zclb::kNumParams> vals{};
  std::array<CLI::Option*, zclb::kNumParams> opts{};

  void attach(CLI::App* cmd) {
    static constexpr std::array<const char*, zclb::kNumParams> flags = {
        "--mu-r",     "--mu-lambda", "--zeta-r",  "--zeta-lambda",
        "--zeta2-r",  "--zeta2-lambda", "--kappa11", "--kappa12",
        "--theta1",   "--h-meas"};
    cmd->add_option("--params", params_file,
                    "JSON file with model parameters (flat object)");
    for (int i = 0; i < zclb::kNumParams; ++i)
      opts[static_cast<std::size_t>(i)] = cmd->add_option(
          flags[static_cast<std::size_t>(i)], vals[static_cast<std::size_t>(i)],
          std::string("model parameter ") +
              zclb::kParamNames[static_cast<std::size_t>(i)]);
  }

  zclb::ModelParams resolve() const {
    zclb::ModelParams p;
    std::array<bool, zclb::kNumParams> given{};
    if (!params_file.empty()) {
      std::ifstream is(params_file);
      if (!is)
        throw std::runtime_error("cannot open params file " + params_file);
      const json j = json::parse(is);
      if (!j.is_object())
        throw std::runtime_error("params file must hold a flat JSON object");
      for (const auto& [key, value] : j.items()) {
        const int idx = zclb::param_index(key);
        if (idx < 0)
          throw std::runtime_error("unknown parameter '" + key +
                                   "' in params file");
        zclb::set_param(p, idx, value.get<double>());
        given[static_cast<std::size_t>(idx)] = true;
      }
    }
    for (int i = 0; i < zclb::kNumParams; ++i)
      if (opts[static_cast<std::size_t>(i)]->count() > 0) {
        zclb::set_param(p, i, vals[static_cast<std::size_t>(i)]);
        given[static_cast<std::size_t>(i)] = true;
      }
    if (!given[4]) p.zeta2_r = p.zeta1_r;
    if (!given[5]) p.zeta2_lambda = p.zeta1_lambda;
    p.validate();
    return p;
  }
};

zclb::Date parse_date_arg(const std::string& s, const char* what) {
  const auto d = zclb::parse_date(s);
  if (!d)
    throw std::runtime_error(std::string(what) + ": cannot parse date '" + s +
                             "' (expected YYYY-MM-DD)");
  return *d;
}

json params_to_json(const zclb::ModelParams& p) {
  json j;
  for (int i = 0; i < zclb::kNumParams; ++i)
    j[zclb::kParamNames[static_cast<std::size_t>(i)]] = zclb::param_value(p, i);
  return j;
}

// ---------------------------------------------------------------------------
// price

struct PriceArgs {
  ParamCli params;
  double x_r = 0.0, x_lambda = 0.0;
  std::vector<double> tenors;
  std::string format = "csv", out;
};

int run_price(const PriceArgs& a) {
  const zclb::ModelParams p = a.params.resolve();
  const zclb::FactorState state{a.x_r, a.x_lambda};
  if (a.tenors.empty()) throw std::runtime_error("price: no tenors given");

  std::ostringstream csv;
  json rows = json::array();
  csv << "tenor,yield,price\n";
  for (double t : a.tenors) {
    const zclb::Tenor tau(t);
    const double price = zclb::zclb_price(p, state, tau);
    csv << fmt12(t) << ',';
    json row{{"tenor", t}, {"price", price}};
    if (t > 0.0) {
      const double y = zclb::zclb_yield(p, state, tau);
      csv << fmt12(y);
      row["yield"] = y;
    } else {
      row["yield"] = nullptr;
    }
    csv << ',' << fmt12(price) << '\n';
    rows.push_back(std::move(row));
  }
  emit(a.out, a.format == "json" ? rows.dump(2) + "\n" : csv.str());
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  ParamCli params;
  int steps = 250;
  double dt = 1.0 / 252.0;
  std::vector<double> tenors;
  std::uint64_t seed = 0;
  std::string start_date = "2000-01-01";
  double x_r = 0.0, x_lambda = 0.0;
  CLI::Option* x_r_opt = nullptr;
  CLI::Option* x_lambda_opt = nullptr;
  std::string format = "csv", out, states_out, noiseless_out;
};

std::string states_to_csv(const zclb::YieldPanel& panel,
                          const Eigen::MatrixXd& states) {
  std::ostringstream os;
  os << "date,x_r,x_lambda\n";
  for (Eigen::Index i = 0; i < states.rows(); ++i)
    os << zclb::format_date(panel.dates[static_cast<std::size_t>(i)]) << ','
       << fmt12(states(i, 0)) << ',' << fmt12(states(i, 1)) << '\n';
  return os.str();
}

int run_simulate(const SimulateArgs& a) {
  const zclb::ModelParams p = a.params.resolve();
  zclb::SimulationConfig cfg;
  cfg.dt = a.dt;
  cfg.n_steps = a.steps;
  cfg.tenors = a.tenors;
  cfg.seed = a.seed;
  cfg.start_date = parse_date_arg(a.start_date, "simulate");
  if (a.x_r_opt->count() > 0 || a.x_lambda_opt->count() > 0)
    cfg.initial_state = zclb::FactorState{a.x_r, a.x_lambda};

  const zclb::SimulatedPanel sim = zclb::simulate_panel(p, cfg);

  if (a.format == "json") {
    json j;
    j["tenors"] = sim.observed.tenors;
    json dates = json::array();
    for (const auto& d : sim.observed.dates) dates.push_back(zclb::format_date(d));
    j["dates"] = std::move(dates);
    auto matrix_to_json = [](const Eigen::MatrixXd& m) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j2 = 0; j2 < m.cols(); ++j2) row.push_back(m(i, j2));
        rows.push_back(std::move(row));
      }
      return rows;
    };
    j["observed"] = matrix_to_json(sim.observed.values);
    j["noiseless"] = matrix_to_json(sim.noiseless);
    j["states"] = matrix_to_json(sim.states);
    emit(a.out, j.dump(2) + "\n");
    return 0;
  }

  emit(a.out, zclb::panel_to_csv(sim.observed));
  if (!a.states_out.empty())
    zclb::atomic_write_file(a.states_out, states_to_csv(sim.observed, sim.states));
  if (!a.noiseless_out.empty()) {
    zclb::YieldPanel clean = sim.observed;
    clean.values = sim.noiseless;
    zclb::atomic_write_file(a.noiseless_out, zclb::panel_to_csv(clean));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// shared panel loading for filter / calibrate

struct DataArgs {
  std::string data;
  std::string column = "Adj Close";
  double tenor = 10.0;
  std::string from, to;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data, "input CSV (native panel or quote file)")
        ->required();
    cmd->add_option("--column", column,
                    "value column when reading a quote file");
    cmd->add_option("--tenor", tenor,
                    "maturity in years of a single-column quote file");
    cmd->add_option("--from", from, "keep rows on/after this date");
    cmd->add_option("--to", to, "keep rows on/before this date");
  }

  zclb::YieldPanel load() const {
    std::ifstream is(data);
    if (!is) throw zclb::CsvError("cannot open " + data);
    std::string header;
    std::getline(is, header);
    is.close();
    zclb::YieldPanel panel = zclb::is_treasury_header(header)
                                 ? zclb::parse_treasury_csv(data, column, tenor)
                                 : zclb::read_panel_csv(data);
    if (from.empty() && to.empty()) return panel;

    const auto lo = from.empty() ? std::optional<zclb::Date>{}
                                 : parse_date_arg(from, "--from");
    const auto hi = to.empty() ? std::optional<zclb::Date>{}
                               : parse_date_arg(to, "--to");
    zclb::YieldPanel filtered;
    filtered.tenors = panel.tenors;
    filtered.source_file = panel.source_file;
    filtered.source_units = panel.source_units;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < panel.n_rows(); ++i) {
      const auto& d = panel.dates[static_cast<std::size_t>(i)];
      if (lo && zclb::to_days(d) < zclb::to_days(*lo)) continue;
      if (hi && zclb::to_days(d) > zclb::to_days(*hi)) continue;
      keep.push_back(i);
      filtered.dates.push_back(d);
    }
    filtered.values.resize(static_cast<Eigen::Index>(keep.size()),
                           panel.values.cols());
    for (std::size_t i = 0; i < keep.size(); ++i)
      filtered.values.row(static_cast<Eigen::Index>(i)) =
          panel.values.row(keep[i]);
    filtered.validate();
    return filtered;
  }
};

// ---------------------------------------------------------------------------
// filter

struct FilterArgs {
  ParamCli params;
  DataArgs data;
  double dt = 1.0 / 252.0;
  std::string init = "stationary";
  std::string format = "csv", out, fitted_out;
};

int run_filter(const FilterArgs& a) {
  const zclb::ModelParams p = a.params.resolve();
  const zclb::YieldPanel panel = a.data.load();
  const zclb::DiscreteSystem sys = zclb::build_system(p, a.dt, panel.tenors);

  std::optional<zclb::InitialState> init;
  if (a.init == "diffuse")
    init = zclb::diffuse_init(sys);
  else if (a.init != "stationary")
    throw std::runtime_error("filter: --init must be stationary or diffuse");

  const zclb::FilterOutput out = zclb::run_filter(sys, panel, init);

  if (a.format == "json") {
    json j;
    j["total_loglik"] = out.total_loglik;
    json steps = json::array();
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
      const zclb::FilterStep& s = out.steps[i];
      json step;
      step["date"] = zclb::format_date(panel.dates[i]);
      step["x_r"] = s.filtered_mean(0);
      step["x_lambda"] = s.filtered_mean(1);
      step["var_r"] = s.filtered_cov(0, 0);
      step["var_lambda"] = s.filtered_cov(1, 1);
      step["step_loglik"] = s.step_loglik;
      json innov = json::array();
      for (Eigen::Index k = 0; k < panel.values.cols(); ++k) innov.push_back(nullptr);
      for (std::size_t k = 0; k < s.observed.size(); ++k)
        innov[static_cast<std::size_t>(s.observed[k])] =
            s.innovation(static_cast<Eigen::Index>(k));
      step["innovation"] = std::move(innov);
      steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);
    emit(a.out, j.dump(2) + "\n");
  } else {
    emit(a.out, zclb::filter_output_to_csv(panel, out));
  }

  if (!a.fitted_out.empty()) {
    std::ostringstream os;
    os << "date";
    for (double t : panel.tenors) os << ",fitted_" << fmt12(t);
    os << '\n';
    for (std::size_t i = 0; i < out.steps.size(); ++i) {
      const Eigen::VectorXd fitted =
          sys.intercept + sys.loading * out.steps[i].filtered_mean;
      os << zclb::format_date(panel.dates[i]);
      for (Eigen::Index k = 0; k < fitted.size(); ++k)
        os << ',' << fmt12(fitted(k));
      os << '\n';
    }
    zclb::atomic_write_file(a.fitted_out, os.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  ParamCli params;  // initial guess
  DataArgs data;
  std::vector<std::string> free_names;
  int restarts = 1;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  double dt = 1.0 / 252.0;
  std::string format = "json", out;
};

json calibration_to_json(const zclb::CalibrationResult& r) {
  json j;
  j["params"] = params_to_json(r.params);
  json se;
  for (int i = 0; i < zclb::kNumParams; ++i)
    se[zclb::kParamNames[static_cast<std::size_t>(i)]] =
        r.se_available ? json(r.std_errors[static_cast<std::size_t>(i)])
                       : json(nullptr);
  j["std_errors"] = std::move(se);
  j["se_available"] = r.se_available;
  j["final_loglik"] = r.final_loglik;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["best_restart"] = r.best_restart;
  json restarts = json::array();
  for (const zclb::RestartInfo& info : r.restart_info)
    restarts.push_back(json{{"index", info.index},
                            {"initial_loglik", info.initial_loglik},
                            {"final_loglik", info.final_loglik},
                            {"iterations", info.iterations},
                            {"converged", info.converged}});
  j["restarts"] = std::move(restarts);
  return j;
}

std::string calibration_to_csv(const zclb::CalibrationResult& r) {
  std::ostringstream os;
  os << "key,value\n";
  for (int i = 0; i < zclb::kNumParams; ++i)
    os << zclb::kParamNames[static_cast<std::size_t>(i)] << ','
       << fmt12(zclb::param_value(r.params, i)) << '\n';
  for (int i = 0; i < zclb::kNumParams; ++i) {
    os << "se_" << zclb::kParamNames[static_cast<std::size_t>(i)] << ',';
    if (r.se_available) os << fmt12(r.std_errors[static_cast<std::size_t>(i)]);
    os << '\n';
  }
  os << "se_available," << (r.se_available ? 1 : 0) << '\n';
  os << "final_loglik," << fmt12(r.final_loglik) << '\n';
  os << "iterations," << r.iterations << '\n';
  os << "converged," << (r.converged ? 1 : 0) << '\n';
  os << "best_restart," << r.best_restart << '\n';
  return os.str();
}

int run_calibrate(const CalibrateArgs& a) {
  const zclb::YieldPanel panel = a.data.load();

  zclb::CalibrationConfig cfg;
  cfg.initial_guess = a.params.resolve();
  cfg.restarts = a.restarts;
  cfg.tolerance = a.tol;
  cfg.max_iterations = a.max_iter;
  cfg.seed = a.seed;
  cfg.dt = a.dt;
  if (a.free_names.empty())
    throw std::runtime_error("calibrate: --free must list at least one parameter");
  for (const std::string& name : a.free_names) {
    const int idx = zclb::param_index(name);
    if (idx < 0)
      throw std::runtime_error("calibrate: unknown parameter '" + name + "'");
    cfg.free_mask[static_cast<std::size_t>(idx)] = true;
  }

  if (panel.tenors.size() == 1 && cfg.n_free() > 4)
    std::cerr << "warning: " << cfg.n_free()
              << " free parameters with a single maturity column; the model "
                 "is unlikely to be identified\n";

  const zclb::CalibrationResult result = zclb::calibrate(panel, cfg);
  emit(a.out, a.format == "json" ? calibration_to_json(result).dump(2) + "\n"
                                 : calibration_to_csv(result));
  return 0;
}

// ---------------------------------------------------------------------------
// survival

struct SurvivalArgs {
  ParamCli params;
  std::vector<double> horizons;
  int paths = 10000;
  double dt = 1.0 / 12.0;
  std::uint64_t seed = 0;
  double x_r = 0.0, x_lambda = 0.0;
  std::string format = "csv", out;
};

int run_survival(const SurvivalArgs& a) {
  const zclb::ModelParams p = a.params.resolve();
  zclb::SimulationConfig cfg;
  cfg.dt = a.dt;
  cfg.n_steps = 1;  // unused by the survival grid
  cfg.seed = a.seed;
  cfg.n_paths = a.paths;
  cfg.initial_state = zclb::FactorState{a.x_r, a.x_lambda};

  const zclb::SurvivalTable table =
      zclb::monte_carlo_survival(p, cfg, a.horizons);

  if (a.format == "json") {
    json j;
    j["n_paths"] = table.n_paths;
    j["negative_lambda_fraction"] = table.negative_intensity_fraction;
    json pts = json::array();
    for (const zclb::SurvivalPoint& pt : table.points)
      pts.push_back(json{{"horizon", pt.horizon},
                         {"mean", pt.mean},
                         {"p5", pt.p5},
                         {"p95", pt.p95}});
    j["points"] = std::move(pts);
    emit(a.out, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << "horizon,mean_survival,p5,p95,negative_lambda_fraction\n";
    for (const zclb::SurvivalPoint& pt : table.points)
      os << fmt12(pt.horizon) << ',' << fmt12(pt.mean) << ',' << fmt12(pt.p5)
         << ',' << fmt12(pt.p95) << ','
         << fmt12(table.negative_intensity_fraction) << '\n';
    emit(a.out, os.str());
  }
  return 0;
}

void add_format_option(CLI::App* cmd, std::string& format) {
  cmd->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-coupon longevity bond model: pricing, filtering, "
               "calibration, simulation"};
  app.require_subcommand(1);

  PriceArgs price;
  CLI::App* price_cmd =
      app.add_subcommand("price", "yield and price over a tenor grid");
  price.params.attach(price_cmd);
  price_cmd->add_option("--x-r", price.x_r, "rate factor deviation");
  price_cmd->add_option("--x-lambda", price.x_lambda,
                        "mortality factor deviation");
  price_cmd->add_option("--tenor,--tenors", price.tenors,
                        "maturities in years")
      ->delimiter(',')
      ->required();
  add_format_option(price_cmd, price.format);
  price_cmd->add_option("--out", price.out, "output file (default stdout)");

  SimulateArgs sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "synthetic yield panel and true states");
  sim.params.attach(sim_cmd);
  sim_cmd->add_option("--steps", sim.steps, "number of observation steps");
  sim_cmd->add_option("--dt", sim.dt, "observation interval in years");
  sim_cmd->add_option("--tenors", sim.tenors, "maturity grid in years")
      ->delimiter(',')
      ->required();
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--start-date", sim.start_date, "first synthetic date");
  sim.x_r_opt = sim_cmd->add_option("--x-r", sim.x_r, "initial rate deviation");
  sim.x_lambda_opt = sim_cmd->add_option("--x-lambda", sim.x_lambda,
                                         "initial mortality deviation");
  add_format_option(sim_cmd, sim.format);
  sim_cmd->add_option("--out", sim.out, "panel output (default stdout)");
  sim_cmd->add_option("--states-out", sim.states_out, "true state path CSV");
  sim_cmd->add_option("--noiseless-out", sim.noiseless_out,
                      "noise-free yield panel CSV");

  FilterArgs filt;
  CLI::App* filter_cmd =
      app.add_subcommand("filter", "Kalman filter over an observed panel");
  filt.params.attach(filter_cmd);
  filt.data.attach(filter_cmd);
  filter_cmd->add_option("--dt", filt.dt, "observation interval in years");
  filter_cmd->add_option("--init", filt.init,
                         "initial state: stationary or diffuse")
      ->check(CLI::IsMember({"stationary", "diffuse"}));
  add_format_option(filter_cmd, filt.format);
  filter_cmd->add_option("--out", filt.out, "output file (default stdout)");
  filter_cmd->add_option("--fitted-out", filt.fitted_out,
                         "fitted yields CSV (intercept + loading * state)");

  CalibrateArgs cal;
  CLI::App* cal_cmd = app.add_subcommand(
      "calibrate", "maximum-likelihood parameter estimation");
  cal.params.attach(cal_cmd);
  cal.data.attach(cal_cmd);
  cal_cmd->add_option("--free", cal.free_names,
                      "comma-separated parameters to estimate")
      ->delimiter(',')
      ->required();
  cal_cmd->add_option("--restarts", cal.restarts, "random restarts");
  cal_cmd->add_option("--tol", cal.tol, "absolute log-likelihood tolerance");
  cal_cmd->add_option("--max-iter", cal.max_iter, "iterations per restart");
  cal_cmd->add_option("--seed", cal.seed, "RNG seed for restarts");
  cal_cmd->add_option("--dt", cal.dt, "observation interval in years");
  add_format_option(cal_cmd, cal.format);
  cal_cmd->add_option("--out", cal.out, "output file (default stdout)");

  SurvivalArgs surv;
  CLI::App* surv_cmd =
      app.add_subcommand("survival", "Monte Carlo survival-rate table");
  surv.params.attach(surv_cmd);
  surv_cmd->add_option("--horizons", surv.horizons, "horizons in years")
      ->delimiter(',')
      ->required();
  surv_cmd->add_option("--paths", surv.paths, "Monte Carlo paths");
  surv_cmd->add_option("--dt", surv.dt, "integration step in years");
  surv_cmd->add_option("--seed", surv.seed, "RNG seed");
  surv_cmd->add_option("--x-r", surv.x_r, "initial rate deviation");
  surv_cmd->add_option("--x-lambda", surv.x_lambda,
                       "initial mortality deviation");
  add_format_option(surv_cmd, surv.format);
  surv_cmd->add_option("--out", surv.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (price_cmd->parsed()) return run_price(price);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (filter_cmd->parsed()) return run_filter(filt);
    if (cal_cmd->parsed()) return run_calibrate(cal);
    if (surv_cmd->parsed()) return run_survival(surv);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}
