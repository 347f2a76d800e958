#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tamsm/additive_hazard.hpp"
#include "tamsm/error.hpp"
#include "tamsm/estimators.hpp"
#include "tamsm/simulation.hpp"
#include "tamsm/text_io.hpp"
#include "tamsm/time_change.hpp"

namespace tamsm::cli {

namespace fs = std::filesystem;

std::vector<double> parse_grid(std::string_view text) {
  auto parts = io::split(text, ':');
  if (parts.size() != 3)
    throw ParseError("grid must be start:end:step, got '" + std::string(text) + "'");
  auto start = io::parse_double(parts[0]);
  auto end = io::parse_double(parts[1]);
  auto step = io::parse_double(parts[2]);
  if (!start || !end || !step)
    throw ParseError("grid must be start:end:step, got '" + std::string(text) + "'");
  if (!(*step > 0.0)) throw ParseError("grid step must be positive");
  if (*end < *start) throw ParseError("grid end precedes start");
  // Tolerate the rounding in e.g. 0:1:0.1 so the end point is kept.
  const auto count = static_cast<std::size_t>(std::floor((*end - *start) / *step + 1e-9));
  std::vector<double> grid;
  grid.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k)
    grid.push_back(*start + static_cast<double>(k) * *step);
  return grid;
}

Cohort load_cohort_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("cohort directory not found: " + dir);
  const std::string baseline_path = (fs::path(dir) / "baseline.csv").string();
  const std::string events_path = (fs::path(dir) / "events.csv").string();
  const std::string cfg_path = (fs::path(dir) / "cohort.cfg").string();
  const std::string baseline = io::read_file(baseline_path);
  const std::string events = io::read_file(events_path);

  std::optional<double> horizon;
  std::vector<std::string> processes;
  if (io::file_exists(cfg_path)) {
    const std::string cfg = io::read_file(cfg_path);
    for (const auto& line : io::content_lines(cfg)) {
      auto eq = line.text.find('=');
      if (eq == std::string_view::npos)
        throw ParseError(cfg_path + ": expected key=value", {}, line.number);
      auto key = io::trim(line.text.substr(0, eq));
      auto value = io::trim(line.text.substr(eq + 1));
      if (key == "horizon") {
        horizon = io::parse_double(value);
        if (!horizon || !(*horizon > 0.0))
          throw ParseError(cfg_path + ": bad horizon", {}, line.number);
      } else if (key == "processes") {
        for (auto name : io::split(value, ','))
          if (!io::trim(name).empty()) processes.emplace_back(io::trim(name));
      } else {
        throw ParseError(cfg_path + ": unknown key '" + std::string(key) + "'", {},
                         line.number);
      }
    }
  }

  CovariateSchema inferred = infer_schema(baseline, events);
  std::vector<CovariateDecl> decls(inferred.decls().begin(), inferred.decls().end());
  for (const auto& name : processes) {
    auto idx = inferred.find(name);
    if (idx) decls[*idx].kind = CovariateKind::process;
    else decls.push_back({name, CovariateKind::process});
  }
  try {
    return parse_cohort(baseline, events, CovariateSchema(std::move(decls)), horizon);
  } catch (const ParseError& e) {
    throw ParseError(dir + ": " + e.what());
  }
}

void save_cohort_dir(const Cohort& cohort, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
  io::write_file((fs::path(dir) / "baseline.csv").string(), write_baseline_csv(cohort));
  io::write_file((fs::path(dir) / "events.csv").string(), write_events_csv(cohort));
  std::string cfg = "horizon=" + io::format_exact(cohort.horizon()) + "\n";
  std::string processes;
  for (const auto& d : cohort.schema().decls()) {
    if (d.kind != CovariateKind::process) continue;
    if (!processes.empty()) processes += ",";
    processes += d.name;
  }
  if (!processes.empty()) cfg += "processes=" + processes + "\n";
  io::write_file((fs::path(dir) / "cohort.cfg").string(), cfg);
}

namespace {

using io::format_report;

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) out << text;
  else io::write_file(path, text);
}

DesignSpec load_design(const std::string& path) {
  return DesignSpec::parse(io::read_file(path));
}

AccelerationSpec load_accel(const std::string& path, const CovariateSchema* schema) {
  if (path.empty()) return {};
  const std::string text = io::read_file(path);
  return schema ? parse_accel_spec(text, *schema) : parse_accel_spec(text);
}

std::string survival_csv(const SurvivalCurve& curve) {
  std::string csv = "time,estimate,lower,upper,scenario\n";
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    csv += format_report(curve.grid[k]) + "," + format_report(curve.estimate[k]) + ",";
    if (curve.has_band())
      csv += format_report(curve.lower[k]) + "," + format_report(curve.upper[k]);
    else
      csv += ",";
    csv += "," + curve.scenario + "\n";
  }
  return csv;
}

struct Common {
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

void add_input(CLI::App* app, Common& c) {
  app->add_option("--input", c.input, "Cohort directory (baseline.csv, events.csv, cohort.cfg)")
      ->required();
}
void add_out(CLI::App* app, Common& c, const char* what) {
  app->add_option("--out", c.out, what);
}
CLI::Option* add_seed(CLI::App* app, Common& c) {
  return app->add_option("--seed", c.seed, "Random seed");
}
void add_threads(CLI::App* app, Common& c) {
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Treatment-accelerated marginal structural survival models", "tamsm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common c;
  std::string design_path, accel_path, grid_text, config_path, residuals_path, strata;
  std::size_t n = 0, reps = 0, paths = 10000;
  double level = 0.95, floor = kDefaultWeightFloor, lambda = 1.0, horizon = 1.0;
  std::function<void()> action;

  auto load_config = [&] {
    DgpConfig cfg = config_path.empty() ? DgpConfig{}
                                        : parse_dgp_config(io::read_file(config_path));
    cfg.validate();
    return cfg;
  };

  // simulate ---------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Simulate a cohort from the DGP");
  simulate->add_option("--config", config_path, "DGP config (key=value); defaults if omitted");
  simulate->add_option("--n", n, "Number of subjects")->required();
  add_seed(simulate, c)->required();
  simulate->add_option("--accel", accel_path,
                       "Acceleration spec; simulates the hypothetical world");
  simulate->add_option("--out", c.out, "Output cohort directory")->required();
  add_threads(simulate, c);
  simulate->callback([&] {
    action = [&] {
      const DgpConfig cfg = load_config();
      const CovariateSchema schema = DgpConfig::schema();
      const Cohort cohort =
          accel_path.empty()
              ? simulate_cohort(cfg, n, c.seed, c.threads)
              : simulate_hypothetical(cfg, load_accel(accel_path, &schema), n, c.seed,
                                      c.threads);
      save_cohort_dir(cohort, c.out);
    };
  });

  // oracle -----------------------------------------------------------------
  auto* oracle = app.add_subcommand(
      "oracle", "Kaplan-Meier of a directly simulated hypothetical cohort");
  oracle->add_option("--config", config_path, "DGP config (key=value); defaults if omitted");
  oracle->add_option("--accel", accel_path, "Acceleration spec (default g = 1)");
  oracle->add_option("--n", n, "Number of subjects")->default_val(200000);
  add_seed(oracle, c)->required();
  oracle->add_option("--grid", grid_text, "Time grid start:end:step")->required();
  add_out(oracle, c, "survival.csv (stdout if omitted)");
  add_threads(oracle, c);
  oracle->callback([&] {
    action = [&] {
      const DgpConfig cfg = load_config();
      const CovariateSchema schema = DgpConfig::schema();
      const AccelerationSpec accel = load_accel(accel_path, &schema);
      const auto grid = parse_grid(grid_text);
      const Cohort cohort = simulate_hypothetical(cfg, accel, n, c.seed, c.threads);
      SurvivalCurve curve = oracle_survival(cohort, grid);
      curve.scenario = accel.label();
      emit(c.out, survival_csv(curve), out);
    };
  });

  // fit-treatment ----------------------------------------------------------
  auto* fit = app.add_subcommand("fit-treatment",
                                 "Aalen additive-hazards fit of the treatment intensity");
  add_input(fit, c);
  fit->add_option("--design", design_path, "Design spec file")->required();
  add_out(fit, c, "coeffs.csv (stdout if omitted)");
  fit->add_option("--residuals", residuals_path,
                  "Also write per-subject martingale residual paths here");
  add_threads(fit, c);
  fit->callback([&] {
    action = [&] {
      const Cohort cohort = load_cohort_dir(c.input);
      const BoundDesign design(load_design(design_path), cohort.schema());
      const auto coeffs = fit_aalen(cohort, design);
      std::string csv = "time,term,increment,cumulative,rank_skipped\n";
      std::vector<double> cumulative(coeffs.dimension(), 0.0);
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        const auto inc = coeffs.increment(k);
        for (std::size_t j = 0; j < coeffs.dimension(); ++j) {
          cumulative[j] += inc[j];
          csv += format_report(coeffs.times[k]) + "," + coeffs.terms[j] + "," +
                 format_report(inc[j]) + "," + format_report(cumulative[j]) + "," +
                 (coeffs.rank_skipped[k] ? "1" : "0") + "\n";
        }
      }
      emit(c.out, csv, out);
      if (!residuals_path.empty()) {
        const auto residuals = martingale_residuals(cohort, coeffs, design, c.threads);
        std::string rcsv = "subject_id,time,residual\n";
        for (std::size_t i = 0; i < cohort.size(); ++i) {
          const auto times = residuals[i].times();
          const auto values = residuals[i].values();
          for (std::size_t k = 0; k < times.size(); ++k)
            rcsv += cohort[i].id() + "," + format_report(times[k]) + "," +
                    format_report(values[k]) + "\n";
        }
        io::write_file(residuals_path, rcsv);
      }
    };
  });

  // weights ----------------------------------------------------------------
  auto* weights = app.add_subcommand("weights", "Likelihood-ratio weight paths");
  add_input(weights, c);
  weights->add_option("--design", design_path, "Design spec file")->required();
  weights->add_option("--accel", accel_path, "Acceleration spec file")->required();
  weights->add_option("--floor", floor, "Weight floor")->capture_default_str();
  add_out(weights, c, "weights.csv (stdout if omitted)");
  add_threads(weights, c);
  weights->callback([&] {
    action = [&] {
      const Cohort cohort = load_cohort_dir(c.input);
      const AccelerationSpec accel = load_accel(accel_path, &cohort.schema());
      const auto result = run_pipeline(cohort, load_design(design_path), accel,
                                       {floor, c.threads});
      const auto& times = result.coefficients.times;
      std::string csv = "subject_id,time,weight\n";
      for (std::size_t i = 0; i < cohort.size(); ++i)
        for (double t : times)
          csv += cohort[i].id() + "," + format_report(t) + "," +
                 format_report(result.weights[i].path.at(t)) + "\n";
      emit(c.out, csv, out);
    };
  });

  // estimate ---------------------------------------------------------------
  auto* estimate = app.add_subcommand("estimate", "Survival under a treatment acceleration");
  add_input(estimate, c);
  estimate->add_option("--design", design_path, "Design spec file")->required();
  estimate->add_option("--accel", accel_path, "Acceleration spec file (default g = 1)");
  estimate->add_option("--grid", grid_text, "Time grid start:end:step")->required();
  estimate->add_option("--bootstrap", reps, "Bootstrap replicates (0 = no band)")
      ->capture_default_str();
  estimate->add_option("--level", level, "Band confidence level")->capture_default_str();
  auto* est_seed = add_seed(estimate, c);
  estimate->add_option("--floor", floor, "Weight floor")->capture_default_str();
  add_out(estimate, c, "survival.csv (stdout if omitted)");
  add_threads(estimate, c);
  estimate->callback([&] {
    action = [&] {
      if (!(level > 0.0 && level < 1.0)) throw ParseError("--level must lie in (0, 1)");
      if (reps > 0 && est_seed->count() == 0)
        throw ParseError("--seed is required with --bootstrap");
      const Cohort cohort = load_cohort_dir(c.input);
      const DesignSpec design = load_design(design_path);
      const AccelerationSpec accel = load_accel(accel_path, &cohort.schema());
      const auto grid = parse_grid(grid_text);
      SurvivalCurve curve;
      if (reps == 0) {
        curve = estimate_survival(cohort, design, accel, grid, {floor, c.threads});
      } else {
        curve = bootstrap_ci(cohort, design, accel, grid,
                             {reps, level, c.seed, floor, c.threads})
                    .curve;
      }
      emit(c.out, survival_csv(curve), out);
    };
  });

  // validate-timechange ------------------------------------------------------
  auto* vtc = app.add_subcommand("validate-timechange",
                                 "Monte-Carlo check of the accelerated intensity");
  vtc->add_option("--lambda", lambda, "Base intensity")->required();
  vtc->add_option("--accel", accel_path, "Acceleration spec file (constant factors)")
      ->required();
  vtc->add_option("--horizon", horizon, "Horizon tau")->required();
  vtc->add_option("--paths", paths, "Number of paths (>= 100)")->capture_default_str();
  add_seed(vtc, c)->required();
  add_out(vtc, c, "Report CSV (stdout if omitted)");
  add_threads(vtc, c);
  vtc->callback([&] {
    action = [&] {
      const auto r = mc_check_intensity(lambda, load_accel(accel_path, nullptr), horizon,
                                        paths, c.seed, c.threads);
      std::string csv = "lambda,horizon,paths,empirical_mean,predicted,std_error,z,pass\n";
      csv += format_report(r.lambda) + "," + format_report(r.horizon) + "," +
             std::to_string(r.paths) + "," + format_report(r.empirical_mean) + "," +
             format_report(r.predicted) + "," + format_report(r.std_error) + "," +
             format_report(r.z) + "," + (r.pass ? "1" : "0") + "\n";
      emit(c.out, csv, out);
    };
  });

  // residuals --------------------------------------------------------------
  auto* resid = app.add_subcommand("residuals", "Stratified martingale residual means");
  add_input(resid, c);
  resid->add_option("--design", design_path, "Design spec file")->required();
  resid->add_option("--strata", strata, "Stratifying expression, e.g. I(x_lci>6)")
      ->required();
  resid->add_option("--grid", grid_text,
                    "Time grid start:end:step (default: pooled treatment times)");
  add_out(resid, c, "CSV (stdout if omitted)");
  add_threads(resid, c);
  resid->callback([&] {
    action = [&] {
      const Cohort cohort = load_cohort_dir(c.input);
      const BoundDesign design(load_design(design_path), cohort.schema());
      const CovariateExpr expr = CovariateExpr::parse(strata);
      if (expr.kind != CovariateExpr::Kind::intercept)
        cohort.schema().index_of(expr.covariate);  // fail before fitting
      const auto coeffs = fit_aalen(cohort, design);
      const auto residuals = martingale_residuals(cohort, coeffs, design, c.threads);
      const auto grid = grid_text.empty() ? coeffs.times : parse_grid(grid_text);
      const auto means = residual_group_means(cohort, residuals, expr, grid);
      std::string csv = "time,stratum,mean\n";
      for (const auto& row : means.rows)
        csv += format_report(row.time) + "," + format_report(row.stratum) + "," +
               format_report(row.mean) + "\n";
      emit(c.out, csv, out);
      for (double s : means.empty_strata)
        err << "note: residuals: stratum " << format_report(s) << " is empty\n";
    };
  });

  auto context = [&]() -> std::string {
    for (auto* sub : app.get_subcommands()) return sub->get_name();
    return "tamsm";
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << app.help(subs.empty() ? "" : subs.front()->get_name());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << context() << ": " << e.what() << "\n";
    return 2;
  }

  try {
    action();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    err << "error: " << context() << ": " << msg << "\n";
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("tamsm");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tamsm::cli
