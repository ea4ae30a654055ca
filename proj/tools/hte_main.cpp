#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "hte/bootstrap.hpp"
#include "hte/errors.hpp"
#include "hte/inference.hpp"
#include "hte/report.hpp"
#include "hte/simulation.hpp"

namespace {

using nlohmann::json;

constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct IoOptions {
  std::string input;
  std::string cluster_col = "cluster";
  std::string y_col = "y";
  std::string t_col = "t";
  std::vector<std::string> x_cols = {"x"};
  std::string pi_col;
  std::string delimiter = ",";
  std::string exposure = "ratio";  // ratio | loo | threshold | column
  double cutpoint = 0.0;
};

struct TestOptions {
  std::vector<double> kappas;
  std::vector<double> bandwidths;
  std::string bandwidth_base = "clusters";
  int grid_points = 100;
  double alpha = 0.05;
  int mass_floor = 5;
  bool no_covariance_correction = false;
  std::string method = "asymptotic";  // asymptotic | bootstrap | both
  int boot_reps = 399;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string output;
  std::string format = "table";  // table | json
};

void add_io_options(CLI::App* cmd, IoOptions& io) {
  cmd->add_option("--input", io.input, "Input CSV path")->required();
  cmd->add_option("--cluster-col", io.cluster_col, "Cluster id column");
  cmd->add_option("--y-col", io.y_col, "Outcome column");
  cmd->add_option("--t-col", io.t_col, "Treatment column (0/1)");
  cmd->add_option("--x-cols", io.x_cols, "Covariate columns")->delimiter(',');
  cmd->add_option("--pi-col", io.pi_col, "Exposure column (with --exposure column)");
  cmd->add_option("--delimiter", io.delimiter, "CSV delimiter");
  cmd->add_option("--exposure", io.exposure,
                  "Exposure mapping: ratio, loo, threshold, column");
  cmd->add_option("--cutpoint", io.cutpoint, "Threshold mapping cutpoint");
}

void add_test_options(CLI::App* cmd, TestOptions& opt, bool with_method) {
  cmd->set_config("--config", "", "Flat key=value config file");
  cmd->add_option("--kappa", opt.kappas,
                  "Bandwidth constants kappa_h (one result per value)")
      ->delimiter(',');
  cmd->add_option("--bandwidth", opt.bandwidths,
                  "Explicit bandwidths (overrides --kappa)")
      ->delimiter(',');
  cmd->add_option("--bandwidth-base", opt.bandwidth_base,
                  "Rate base for the bandwidth rule: clusters or units");
  cmd->add_option("--grid", opt.grid_points, "Evaluation grid size");
  cmd->add_option("--alpha", opt.alpha, "Significance level");
  cmd->add_option("--mass-floor", opt.mass_floor,
                  "Minimum kernel support per cell at a grid point");
  cmd->add_flag("--no-covariance-correction", opt.no_covariance_correction,
                "Drop the within-bandwidth covariance correction");
  if (with_method) {
    cmd->add_option("--method", opt.method,
                    "asymptotic, bootstrap, or both");
    cmd->add_option("--boot-reps", opt.boot_reps, "Bootstrap resamples");
  }
  cmd->add_option("--seed", opt.seed, "RNG seed");
  cmd->add_option("--workers", opt.workers, "Worker threads (0 = all cores)")
      ->envname("HTE_WORKERS");
  cmd->add_option("--output", opt.output, "Write the report to this path");
  cmd->add_option("--format", opt.format, "Report format: table or json");
}

hte::ClusteredSample load_sample(const IoOptions& io) {
  hte::CsvSchema schema;
  schema.cluster = io.cluster_col;
  schema.outcome = io.y_col;
  schema.treatment = io.t_col;
  schema.covariates = io.x_cols;
  if (io.delimiter.size() != 1)
    throw hte::DataError("delimiter must be a single character");
  schema.delimiter = io.delimiter[0];
  if (io.exposure == "column") {
    if (io.pi_col.empty())
      throw hte::DataError("--exposure column requires --pi-col");
    schema.exposure = io.pi_col;
  }
  hte::ClusteredSample sample = hte::load_clustered_csv(io.input, schema);
  if (io.exposure == "ratio")
    sample = sample.with_exposure(hte::ExposureMapping::treatment_ratio());
  else if (io.exposure == "loo")
    sample = sample.with_exposure(hte::ExposureMapping::leave_one_out_ratio());
  else if (io.exposure == "threshold")
    sample = sample.with_exposure(hte::ExposureMapping::threshold(io.cutpoint));
  else if (io.exposure != "column")
    throw hte::DataError("unknown exposure mapping '" + io.exposure + "'");
  sample.validate();
  return sample;
}

std::vector<hte::TestConfig> make_configs(const hte::ClusteredSample& sample,
                                          const TestOptions& opt) {
  std::vector<hte::TestConfig> configs;
  hte::TestConfig base;
  base.grid_points = opt.grid_points;
  base.alpha = opt.alpha;
  base.mass_floor = opt.mass_floor;
  base.covariance_correction = !opt.no_covariance_correction;
  base.bandwidth_rule.base = opt.bandwidth_base == "units"
                                 ? hte::BandwidthRule::Base::Units
                                 : hte::BandwidthRule::Base::Clusters;
  if (!opt.bandwidths.empty()) {
    for (double h : opt.bandwidths) {
      base.explicit_h = h;
      configs.push_back(base);
    }
  } else {
    std::vector<double> kappas = opt.kappas;
    if (kappas.empty()) kappas.push_back(base.bandwidth_rule.kappa_h);
    for (double kappa : kappas) {
      base.explicit_h = 0.0;
      base.bandwidth_rule.kappa_h = kappa;
      configs.push_back(base);
    }
  }
  (void)sample;
  return configs;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw hte::DataError("cannot write '" + path + "'");
  out << text;
}

int cmd_test(const IoOptions& io, const TestOptions& opt) {
  const hte::ClusteredSample sample = load_sample(io);
  const bool run_asym = opt.method == "asymptotic" || opt.method == "both";
  const bool run_boot = opt.method == "bootstrap" || opt.method == "both";
  if (!run_asym && !run_boot)
    throw hte::DataError("unknown method '" + opt.method + "'");

  json results = json::array();
  std::string table;
  for (const hte::TestConfig& cfg : make_configs(sample, opt)) {
    const double h = cfg.resolve_bandwidth(sample).h[0];
    json entry;
    entry["h"] = h;

    if (run_asym) {
      const hte::TestPair pair = hte::run_both_tests(sample, cfg);
      const hte::MtpResult mtp =
          hte::holm(pair.s1.p_value, pair.s2.p_value, cfg.alpha);
      entry["s1"] = hte::to_json(pair.s1, sample);
      entry["s2"] = hte::to_json(pair.s2, sample);
      entry["holm"] = hte::to_json(mtp);
      table += hte::render_report(pair.s1, pair.s2, mtp, sample, h);
    }
    if (run_boot) {
      hte::BootstrapConfig bc;
      bc.reps = opt.boot_reps;
      bc.seed = opt.seed;
      bc.workers = opt.workers;
      const auto b1 = hte::pairs_cluster_bootstrap_s1(sample, cfg, bc);
      const auto b2 = hte::wild_cluster_bootstrap_s2(sample, cfg, bc);
      const hte::MtpResult mtp = hte::holm(b1.p_value, b2.p_value, cfg.alpha);
      auto boot_json = [](const hte::BootstrapResult& b) {
        return json{{"observed", b.observed},
                    {"p_value", b.p_value},
                    {"reps_completed", b.reps_completed},
                    {"reps_failed", b.reps_failed}};
      };
      entry["bootstrap_s1"] = boot_json(b1);
      entry["bootstrap_s2"] = boot_json(b2);
      entry["bootstrap_holm"] = hte::to_json(mtp);
      std::ostringstream os;
      os << "h = " << h << " bootstrap: p(S1) = " << b1.p_value
         << ", p(S2) = " << b2.p_value << ", "
         << hte::heterogeneity_source_name(mtp.classification) << "\n";
      table += os.str();
    }
    results.push_back(std::move(entry));
  }

  if (opt.format == "json")
    emit(json{{"results", results}}.dump(2) + "\n", opt.output);
  else
    emit(table, opt.output);
  return 0;
}

std::vector<double> parse_beta_range(const std::string& text) {
  // "a:b:step" or a comma list
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double a, b, step;
    char c1, c2;
    std::istringstream is(text);
    if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' ||
        step <= 0.0)
      throw hte::DataError("bad beta range '" + text + "' (use a:b:step)");
    for (double v = a; v <= b + 1e-12; v += step) out.push_back(v);
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw hte::DataError("empty beta range");
  return out;
}

struct SimulateOptions {
  std::string stat = "s1";
  std::string method = "asymptotic";
  std::string betas = "0.0";
  std::string preset;
  int reps = 1000;
  int boot_reps = 399;
  int clusters = 150;
  int cluster_size = 10;
  std::vector<double> levels = {0.3, 0.4, 0.5, 0.6};
  std::string cate = "linear";
  double beta0 = 1.0;
  double beta1 = 1.0;
  int d = 1;
  std::string long_output;
};

int cmd_simulate(const SimulateOptions& sim, const TestOptions& opt) {
  hte::SimulationConfig cfg;
  if (sim.reps < 1) throw hte::DataError("--reps must be >= 1");
  cfg.stat = sim.stat == "s2" ? hte::StatKind::S2 : hte::StatKind::S1;
  if (sim.stat != "s1" && sim.stat != "s2")
    throw hte::DataError("unknown stat '" + sim.stat + "'");
  cfg.method = sim.method == "bootstrap" ? hte::MethodKind::Bootstrap
                                         : hte::MethodKind::Asymptotic;
  cfg.reps = sim.reps;
  cfg.bootstrap_reps = sim.boot_reps;
  cfg.seed = opt.seed;
  cfg.workers = opt.workers;
  cfg.betas = parse_beta_range(sim.betas);

  cfg.dgp.clusters = sim.clusters;
  cfg.dgp.cluster_size = sim.cluster_size;
  cfg.dgp.exposure_levels = sim.levels;
  cfg.dgp.beta0 = sim.beta0;
  cfg.dgp.beta1 = sim.beta1;
  cfg.dgp.d = sim.d;
  if (sim.cate == "cosine")
    cfg.dgp.cate_form = hte::DgpConfig::CateForm::CosineNonlinear;
  else if (sim.cate == "multix")
    cfg.dgp.cate_form = hte::DgpConfig::CateForm::LinearMultiX;
  else if (sim.cate != "linear")
    throw hte::DataError("unknown cate form '" + sim.cate + "'");

  if (sim.preset == "paper-a1") {
    cfg.stat = hte::StatKind::S1;
    cfg.method = hte::MethodKind::Asymptotic;
    cfg.dgp = hte::DgpConfig{};
    cfg.betas.clear();
    for (int i = -10; i <= 10; ++i) cfg.betas.push_back(i * 0.05);
  } else if (!sim.preset.empty()) {
    throw hte::DataError("unknown preset '" + sim.preset + "'");
  }

  cfg.test.grid_points = opt.grid_points;
  cfg.test.mass_floor = opt.mass_floor;
  cfg.test.covariance_correction = !opt.no_covariance_correction;
  cfg.test.bandwidth_rule.base = opt.bandwidth_base == "units"
                                     ? hte::BandwidthRule::Base::Units
                                     : hte::BandwidthRule::Base::Clusters;
  if (!opt.bandwidths.empty())
    cfg.test.explicit_h = opt.bandwidths[0];
  else if (!opt.kappas.empty())
    cfg.test.bandwidth_rule.kappa_h = opt.kappas[0];

  const hte::PowerTable table = hte::rejection_probabilities(cfg);
  emit(hte::power_table_csv(table), opt.output);
  if (!sim.long_output.empty())
    emit(hte::power_table_long_csv(table), sim.long_output);
  return 0;
}

int cmd_compare(const IoOptions& io, const TestOptions& opt) {
  const hte::ClusteredSample sample = load_sample(io);
  const hte::ParametricResult ols = hte::ols_cluster_comparison(sample);

  json entries = json::array();
  std::string table = hte::render_report(ols);
  table += "\n";
  for (const hte::TestConfig& cfg : make_configs(sample, opt)) {
    const double h = cfg.resolve_bandwidth(sample).h[0];
    const hte::TestPair pair = hte::run_both_tests(sample, cfg);
    const hte::MtpResult mtp =
        hte::holm(pair.s1.p_value, pair.s2.p_value, cfg.alpha);
    json entry;
    entry["h"] = h;
    entry["s1"] = hte::to_json(pair.s1, sample);
    entry["s2"] = hte::to_json(pair.s2, sample);
    entry["holm"] = hte::to_json(mtp);
    entries.push_back(std::move(entry));
    table += hte::render_report(pair.s1, pair.s2, mtp, sample, h);
  }

  if (opt.format == "json") {
    json out;
    out["ols"] = hte::to_json(ols);
    out["nonparametric"] = entries;
    emit(out.dump(2) + "\n", opt.output);
  } else {
    emit(table, opt.output);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Nonparametric tests for heterogeneous treatment effects under "
      "clustered interference"};
  app.require_subcommand(1);

  IoOptions io_test, io_compare;
  TestOptions opt_test, opt_simulate, opt_compare;
  SimulateOptions sim;

  CLI::App* test = app.add_subcommand(
      "test", "Run both tests and the Holm classification on a CSV dataset");
  add_io_options(test, io_test);
  add_test_options(test, opt_test, /*with_method=*/true);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo rejection probabilities on the built-in DGPs");
  simulate->add_option("--stat", sim.stat, "s1 or s2");
  simulate->add_option("--sim-method", sim.method, "asymptotic or bootstrap");
  simulate->add_option("--beta1", sim.betas,
                       "Varied coefficient range a:b:step or list (s1)");
  simulate->add_option("--beta0", sim.betas,
                       "Varied coefficient range a:b:step or list (s2)");
  simulate->add_option("--reps", sim.reps, "Monte Carlo replications");
  simulate->add_option("--sim-boot-reps", sim.boot_reps,
                       "Bootstrap resamples per replication");
  simulate->add_option("--clusters", sim.clusters, "Clusters per sample");
  simulate->add_option("--cluster-size", sim.cluster_size, "Units per cluster");
  simulate->add_option("--exposure-levels", sim.levels, "Exposure levels")
      ->delimiter(',');
  simulate->add_option("--cate", sim.cate, "linear, cosine, or multix");
  simulate->add_option("--fixed-beta0", sim.beta0,
                       "Fixed beta0 when varying beta1");
  simulate->add_option("--fixed-beta1", sim.beta1,
                       "Fixed beta1 when varying beta0");
  simulate->add_option("--dim", sim.d, "Covariate dimension");
  simulate->add_option("--preset", sim.preset, "Named layout, e.g. paper-a1");
  simulate->add_option("--long-output", sim.long_output,
                       "Also write a long-format CSV here");
  add_test_options(simulate, opt_simulate, /*with_method=*/false);

  CLI::App* compare = app.add_subcommand(
      "compare",
      "Side-by-side OLS (cluster-robust) and nonparametric tests on one "
      "dataset");
  add_io_options(compare, io_compare);
  add_test_options(compare, opt_compare, /*with_method=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (test->parsed()) return cmd_test(io_test, opt_test);
    if (simulate->parsed()) return cmd_simulate(sim, opt_simulate);
    if (compare->parsed()) return cmd_compare(io_compare, opt_compare);
  } catch (const hte::DataError& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return kExitData;
  } catch (const hte::NumericError& e) {
    std::cerr << "error[numeric]: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
