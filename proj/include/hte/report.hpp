#pragma once

#include <string>

#include <json.hpp>

#include "hte/inference.hpp"
#include "hte/simulation.hpp"

namespace hte {

nlohmann::json to_json(const StatisticDecomposition& stat,
                       const ClusteredSample& sample);
nlohmann::json to_json(const TestResult& result,
                       const ClusteredSample& sample);
nlohmann::json to_json(const MtpResult& result);
nlohmann::json to_json(const ParametricResult& result);

// Human-readable report table for one bandwidth's pair of tests plus the
// Holm classification.
std::string render_report(const TestResult& s1, const TestResult& s2,
                          const MtpResult& mtp, const ClusteredSample& sample,
                          double h);

std::string render_report(const ParametricResult& result);

}  // namespace hte
