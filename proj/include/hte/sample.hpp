#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hte {

// Exposure mapping: a rule reducing a cluster treatment vector to a scalar
// exposure per unit. Depends only on the treatment vector (plus the unit
// index for the leave-one-out variant), never on covariates or outcomes.
struct ExposureMapping {
  enum class Kind { TreatmentRatio, LeaveOneOutRatio, Threshold };
  Kind kind = Kind::TreatmentRatio;
  double cutpoint = 0.0;  // Threshold only: pi = 1{ratio > cutpoint}

  std::string describe() const;

  static ExposureMapping treatment_ratio();
  static ExposureMapping leave_one_out_ratio();
  static ExposureMapping threshold(double cutpoint);
};

// Pooled clustered sample, units stored contiguously grouped by cluster.
class ClusteredSample {
 public:
  ClusteredSample() = default;

  // Construct from flat per-unit columns. cluster_key groups units; input
  // order is preserved within a cluster, clusters ordered by first
  // appearance. x is row-major N x d. pi may be empty (exposures unset).
  static ClusteredSample from_columns(std::span<const std::string> cluster_key,
                                      std::span<const double> y,
                                      std::span<const int> t,
                                      std::span<const double> x, int d,
                                      std::span<const double> pi);

  int num_units() const { return static_cast<int>(y_.size()); }
  int num_clusters() const { return static_cast<int>(cluster_begin_.size()); }
  int dim() const { return d_; }
  bool exposures_set() const { return pi_set_; }
  // Number of distinct exposure levels K.
  int num_levels() const { return static_cast<int>(levels_.size()); }

  const std::vector<double>& y() const { return y_; }
  const std::vector<std::int8_t>& t() const { return t_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& pi() const { return pi_; }
  const std::vector<double>& exposure_levels() const { return levels_; }
  const std::vector<std::string>& cluster_names() const { return names_; }

  double x_at(int unit, int coord) const { return x_[unit * d_ + coord]; }
  // Index into exposure_levels() for a unit, -1 when exposures are unset.
  int level_of(int unit) const { return level_of_[unit]; }

  int cluster_size(int c) const { return cluster_end_[c] - cluster_begin_[c]; }
  int cluster_begin(int c) const { return cluster_begin_[c]; }
  int cluster_end(int c) const { return cluster_end_[c]; }

  // Returns a copy with exposures assigned by the mapping. Errors on
  // singleton clusters under the leave-one-out rule.
  ClusteredSample with_exposure(const ExposureMapping& mapping) const;

  // Copy with outcomes replaced (bootstrap pseudo-samples).
  ClusteredSample with_outcomes(std::span<const double> y_new) const;

  // New sample made of verbatim copies of the listed clusters (repeats
  // allowed). pi_override, when nonempty, assigns one exposure value to
  // every unit of the corresponding copied cluster.
  static ClusteredSample resample_clusters(
      const ClusteredSample& base, std::span<const int> clusters,
      std::span<const double> pi_override);

  // Sample standard deviation (n-1 denominator) of coordinate j.
  double x_stddev(int coord) const;
  double y_variance() const;

  // Requires K >= 2 and K < C once exposures are set; validates T binary,
  // exposure membership, covariate dimensions. Throws DataError.
  void validate() const;

 private:
  friend class SampleBuilder;

  void index_levels(double rel_tol = 1e-9);

  int d_ = 0;
  bool pi_set_ = false;
  std::vector<double> y_;
  std::vector<std::int8_t> t_;
  std::vector<double> x_;   // row-major N x d
  std::vector<double> pi_;  // canonicalized exposure per unit
  std::vector<int> level_of_;
  std::vector<double> levels_;  // sorted distinct exposures
  std::vector<int> cluster_begin_, cluster_end_;
  std::vector<std::string> names_;
};

// Column-name schema for CSV ingestion.
struct CsvSchema {
  std::string cluster = "cluster";
  std::string outcome = "y";
  std::string treatment = "t";
  std::vector<std::string> covariates = {"x"};
  std::optional<std::string> exposure;  // absent: exposures unset
  char delimiter = ',';
};

ClusteredSample load_clustered_csv(const std::string& path,
                                   const CsvSchema& schema);

// Writes columns cluster,y,t,x1..xd[,pi] at full double precision, so a
// load of the written file reproduces every numeric field bit-exactly.
void write_clustered_csv(const ClusteredSample& sample,
                         const std::string& path);

// Per (exposure level, treatment arm) occupancy.
struct OverlapDiagnostics {
  struct Cell {
    double pi;
    int t;
    int count;
    double share;
  };
  std::vector<Cell> cells;
  double min_share = 1.0;
  std::vector<std::string> warnings;
};

// Tabulates (pi, t) cell occupancy; warns on cells below min_share and
// throws NumericError on any empty cell (the test statistics would divide
// by an estimated zero mass somewhere on the grid).
OverlapDiagnostics overlap_check(const ClusteredSample& sample,
                                 double min_share = 0.02);

}  // namespace hte
