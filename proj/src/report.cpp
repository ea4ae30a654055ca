#include "hte/report.hpp"

#include <iomanip>
#include <sstream>

namespace hte {

nlohmann::json to_json(const StatisticDecomposition& stat,
                       const ClusteredSample& sample) {
  nlohmann::json contributions = nlohmann::json::array();
  for (const auto& c : stat.contributions) {
    nlohmann::json row;
    row["pi"] = sample.exposure_levels()[c.level_a];
    if (c.level_b >= 0)
      row["pi_prime"] = sample.exposure_levels()[c.level_b];
    row["value"] = c.value;
    contributions.push_back(row);
  }
  return nlohmann::json{{"raw", stat.raw},
                        {"bias", stat.bias},
                        {"scale", stat.scale},
                        {"studentized", stat.studentized},
                        {"contributions", contributions},
                        {"diagnostics",
                         {{"dropped_grid_points", stat.dropped_grid_points},
                          {"corr_clamps", stat.corr_clamps},
                          {"rho2_floor_hits", stat.rho2_floor_hits}}}};
}

nlohmann::json to_json(const TestResult& result,
                       const ClusteredSample& sample) {
  return nlohmann::json{
      {"hypothesis", hypothesis_name(result.hypothesis)},
      {"statistic", to_json(result.statistic, sample)},
      {"p_value", result.p_value},
      {"level", result.level},
      {"reject", result.reject},
      {"method", result.method == TestResult::Method::Asymptotic
                     ? "asymptotic"
                     : "bootstrap"}};
}

nlohmann::json to_json(const MtpResult& result) {
  return nlohmann::json{
      {"p_values", {result.p_values[0], result.p_values[1]}},
      {"reject", {result.reject[0], result.reject[1]}},
      {"alpha", result.alpha},
      {"classification", heterogeneity_source_name(result.classification)}};
}

nlohmann::json to_json(const ParametricResult& result) {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t j = 0; j < result.names.size(); ++j)
    coefs.push_back({{"term", result.names[j]},
                     {"estimate", result.coef[j]},
                     {"std_error", result.se[j]},
                     {"t_value", result.t_stat[j]},
                     {"p_value", result.p_value[j]}});
  return nlohmann::json{{"coefficients", coefs},
                        {"interaction_wald", result.interaction_wald},
                        {"interaction_p", result.interaction_p},
                        {"n", result.n},
                        {"clusters", result.clusters}};
}

namespace {

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string fmt_p(double p) {
  if (p < 0.001) return "<0.001";
  return fmt(p, 3);
}

void render_statistic(std::ostringstream& os, const std::string& label,
                      const TestResult& r) {
  os << "  " << label << ": raw " << fmt(r.statistic.raw) << ", bias "
     << fmt(r.statistic.bias) << ", scale " << fmt(r.statistic.scale)
     << ", S " << fmt(r.statistic.studentized) << ", p "
     << fmt_p(r.p_value) << (r.reject ? "  [reject]" : "  [fail to reject]")
     << "\n";
}

}  // namespace

std::string render_report(const TestResult& s1, const TestResult& s2,
                          const MtpResult& mtp, const ClusteredSample& sample,
                          double h) {
  std::ostringstream os;
  os << "h = " << fmt(h) << " (N = " << sample.num_units()
     << ", C = " << sample.num_clusters() << ", K = " << sample.num_levels()
     << ")\n";
  render_statistic(os, "H0_Pi (CTEs across exposure)     S1", s1);
  render_statistic(os, "H0_X  (CTEs across pretreatment) S2", s2);
  os << "  Holm at alpha=" << mtp.alpha << ": "
     << heterogeneity_source_name(mtp.classification) << "\n";
  return os.str();
}

std::string render_report(const ParametricResult& r) {
  std::ostringstream os;
  os << "OLS with cluster-robust standard errors (N = " << r.n
     << ", clusters = " << r.clusters << ")\n";
  os << "  " << std::left << std::setw(12) << "term" << std::right
     << std::setw(12) << "estimate" << std::setw(12) << "std.error"
     << std::setw(10) << "t" << std::setw(10) << "p" << "\n";
  for (std::size_t j = 0; j < r.names.size(); ++j) {
    std::ostringstream row;
    row << "  " << std::left << std::setw(12) << r.names[j] << std::right
        << std::setw(12) << fmt(r.coef[j]) << std::setw(12) << fmt(r.se[j])
        << std::setw(10) << fmt(r.t_stat[j], 3) << std::setw(10)
        << fmt_p(r.p_value[j]);
    os << row.str() << "\n";
  }
  os << "  Wald (T:X = T:Pi = 0): chi2 = " << fmt(r.interaction_wald, 3)
     << ", p = " << fmt_p(r.interaction_p) << "\n";
  return os.str();
}

}  // namespace hte
