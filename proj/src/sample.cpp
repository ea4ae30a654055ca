#include "hte/sample.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "hte/errors.hpp"

namespace hte {

std::string ExposureMapping::describe() const {
  switch (kind) {
    case Kind::TreatmentRatio:
      return "treatment ratio";
    case Kind::LeaveOneOutRatio:
      return "leave-one-out treatment ratio";
    case Kind::Threshold: {
      std::ostringstream os;
      os << "1{treatment ratio > " << cutpoint << "}";
      return os.str();
    }
  }
  return "?";
}

ExposureMapping ExposureMapping::treatment_ratio() { return {}; }

ExposureMapping ExposureMapping::leave_one_out_ratio() {
  ExposureMapping m;
  m.kind = Kind::LeaveOneOutRatio;
  return m;
}

ExposureMapping ExposureMapping::threshold(double cutpoint) {
  ExposureMapping m;
  m.kind = Kind::Threshold;
  m.cutpoint = cutpoint;
  return m;
}

ClusteredSample ClusteredSample::from_columns(
    std::span<const std::string> cluster_key, std::span<const double> y,
    std::span<const int> t, std::span<const double> x, int d,
    std::span<const double> pi) {
  const std::size_t n = y.size();
  if (n == 0) throw DataError("sample: no rows");
  if (cluster_key.size() != n || t.size() != n)
    throw DataError("sample: column lengths differ");
  if (d < 1 || x.size() != n * static_cast<std::size_t>(d))
    throw DataError("sample: covariate block must be N x d");
  const bool has_pi = !pi.empty();
  if (has_pi && pi.size() != n)
    throw DataError("sample: exposure column length differs");

  // Group rows by cluster key, clusters ordered by first appearance and
  // row order preserved within a cluster.
  std::unordered_map<std::string, int> cluster_index;
  std::vector<std::vector<int>> rows_of;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] =
        cluster_index.emplace(cluster_key[i], static_cast<int>(names.size()));
    if (inserted) {
      names.push_back(cluster_key[i]);
      rows_of.emplace_back();
    }
    rows_of[it->second].push_back(static_cast<int>(i));
  }

  ClusteredSample s;
  s.d_ = d;
  s.names_ = std::move(names);
  s.y_.reserve(n);
  s.t_.reserve(n);
  s.x_.reserve(n * d);
  if (has_pi) s.pi_.reserve(n);
  for (std::size_t c = 0; c < rows_of.size(); ++c) {
    s.cluster_begin_.push_back(static_cast<int>(s.y_.size()));
    for (int row : rows_of[c]) {
      if (t[row] != 0 && t[row] != 1)
        throw DataError("sample: non-binary treatment in row " +
                        std::to_string(row + 1));
      s.y_.push_back(y[row]);
      s.t_.push_back(static_cast<std::int8_t>(t[row]));
      for (int j = 0; j < d; ++j) s.x_.push_back(x[row * d + j]);
      if (has_pi) s.pi_.push_back(pi[row]);
    }
    s.cluster_end_.push_back(static_cast<int>(s.y_.size()));
  }
  s.pi_set_ = has_pi;
  if (has_pi) s.index_levels();
  return s;
}

void ClusteredSample::index_levels(double rel_tol) {
  // Canonicalize exposures: values within rel_tol (relative, with an
  // absolute floor) collapse to one level so indicator grouping is exact.
  std::vector<double> sorted = pi_;
  std::sort(sorted.begin(), sorted.end());
  levels_.clear();
  for (double v : sorted) {
    if (!std::isfinite(v)) throw DataError("sample: non-finite exposure");
    if (levels_.empty()) {
      levels_.push_back(v);
      continue;
    }
    const double ref = std::max({std::abs(levels_.back()), std::abs(v), 1.0});
    if (v - levels_.back() > rel_tol * ref) levels_.push_back(v);
  }
  level_of_.resize(pi_.size());
  for (std::size_t i = 0; i < pi_.size(); ++i) {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), pi_[i]);
    int idx;
    if (it == levels_.end()) {
      idx = static_cast<int>(levels_.size()) - 1;
    } else {
      idx = static_cast<int>(it - levels_.begin());
      if (it != levels_.begin()) {
        // nearer of the two neighbors
        if (pi_[i] - *(it - 1) < *it - pi_[i]) --idx;
      }
    }
    level_of_[i] = idx;
    pi_[i] = levels_[idx];
  }
}

ClusteredSample ClusteredSample::with_exposure(
    const ExposureMapping& mapping) const {
  ClusteredSample s = *this;
  s.pi_.assign(y_.size(), 0.0);
  for (int c = 0; c < num_clusters(); ++c) {
    const int b = cluster_begin_[c], e = cluster_end_[c];
    const int nc = e - b;
    int treated = 0;
    for (int i = b; i < e; ++i) treated += t_[i];
    const double ratio = static_cast<double>(treated) / nc;
    switch (mapping.kind) {
      case ExposureMapping::Kind::TreatmentRatio:
        for (int i = b; i < e; ++i) s.pi_[i] = ratio;
        break;
      case ExposureMapping::Kind::LeaveOneOutRatio:
        if (nc < 2)
          throw DataError("exposure: leave-one-out undefined on singleton "
                          "cluster '" +
                          names_[c] + "'");
        for (int i = b; i < e; ++i)
          s.pi_[i] = static_cast<double>(treated - t_[i]) / (nc - 1);
        break;
      case ExposureMapping::Kind::Threshold:
        for (int i = b; i < e; ++i)
          s.pi_[i] = ratio > mapping.cutpoint ? 1.0 : 0.0;
        break;
    }
  }
  s.pi_set_ = true;
  s.index_levels();
  return s;
}

ClusteredSample ClusteredSample::resample_clusters(
    const ClusteredSample& base, std::span<const int> clusters,
    std::span<const double> pi_override) {
  if (!pi_override.empty() && pi_override.size() != clusters.size())
    throw DataError("resample: exposure override length mismatch");
  ClusteredSample s;
  s.d_ = base.d_;
  s.pi_set_ = base.pi_set_ || !pi_override.empty();
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const int c = clusters[ci];
    const int b = base.cluster_begin_[c], e = base.cluster_end_[c];
    s.cluster_begin_.push_back(static_cast<int>(s.y_.size()));
    for (int i = b; i < e; ++i) {
      s.y_.push_back(base.y_[i]);
      s.t_.push_back(base.t_[i]);
      for (int j = 0; j < base.d_; ++j) s.x_.push_back(base.x_[i * base.d_ + j]);
      if (!pi_override.empty())
        s.pi_.push_back(pi_override[ci]);
      else if (base.pi_set_)
        s.pi_.push_back(base.pi_[i]);
    }
    s.cluster_end_.push_back(static_cast<int>(s.y_.size()));
    s.names_.push_back(base.names_[c]);
  }
  if (s.pi_set_) s.index_levels();
  return s;
}

ClusteredSample ClusteredSample::with_outcomes(
    std::span<const double> y_new) const {
  if (y_new.size() != y_.size())
    throw DataError("with_outcomes: length mismatch");
  ClusteredSample s = *this;
  s.y_.assign(y_new.begin(), y_new.end());
  return s;
}

double ClusteredSample::x_stddev(int coord) const {
  const int n = num_units();
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += x_at(i, coord);
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dxi = x_at(i, coord) - mean;
    ss += dxi * dxi;
  }
  return n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
}

double ClusteredSample::y_variance() const {
  const int n = num_units();
  double mean = std::accumulate(y_.begin(), y_.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y_) ss += (v - mean) * (v - mean);
  return n > 1 ? ss / (n - 1) : 0.0;
}

void ClusteredSample::validate() const {
  if (num_units() == 0) throw DataError("sample: empty");
  for (int c = 0; c < num_clusters(); ++c)
    if (cluster_size(c) < 1) throw DataError("sample: empty cluster");
  if (pi_set_) {
    const int K = num_levels();
    if (K < 2)
      throw DataError("sample: need at least 2 distinct exposure levels, got " +
                      std::to_string(K));
    if (K >= num_clusters())
      throw DataError("sample: exposure levels (" + std::to_string(K) +
                      ") must be fewer than clusters (" +
                      std::to_string(num_clusters()) + ")");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

double parse_number(const std::string& s, const std::string& column,
                    std::size_t row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw DataError("csv: non-numeric value '" + s + "' in column '" + column +
                    "', row " + std::to_string(row));
  }
}

}  // namespace

ClusteredSample load_clustered_csv(const std::string& path,
                                   const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) throw DataError("csv: empty file");
  const auto cols = split_csv_line(header, schema.delimiter);
  auto col_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i);
    throw DataError("csv: missing column '" + name + "'");
  };

  const int ci = col_index(schema.cluster);
  const int yi = col_index(schema.outcome);
  const int ti = col_index(schema.treatment);
  std::vector<int> xi;
  for (const auto& name : schema.covariates) xi.push_back(col_index(name));
  int pii = -1;
  if (schema.exposure) pii = col_index(*schema.exposure);
  const int d = static_cast<int>(xi.size());

  std::vector<std::string> cluster_key;
  std::vector<double> y, x, pi;
  std::vector<int> t;
  std::string line;
  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, schema.delimiter);
    if (fields.size() != cols.size())
      throw DataError("csv: row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(cols.size()));
    cluster_key.push_back(fields[ci]);
    y.push_back(parse_number(fields[yi], schema.outcome, row));
    const double traw = parse_number(fields[ti], schema.treatment, row);
    if (traw != 0.0 && traw != 1.0)
      throw DataError("csv: treatment must be 0 or 1, got '" + fields[ti] +
                      "' in row " + std::to_string(row));
    t.push_back(static_cast<int>(traw));
    for (int j = 0; j < d; ++j)
      x.push_back(parse_number(fields[xi[j]], schema.covariates[j], row));
    if (pii >= 0)
      pi.push_back(parse_number(fields[pii], *schema.exposure, row));
  }
  if (y.empty()) throw DataError("csv: no data rows in '" + path + "'");
  return ClusteredSample::from_columns(cluster_key, y, t, x, d, pi);
}

void write_clustered_csv(const ClusteredSample& sample,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  out << "cluster,y,t";
  for (int j = 0; j < sample.dim(); ++j) out << ",x" << (j + 1);
  if (sample.exposures_set()) out << ",pi";
  out << "\n";
  out << std::setprecision(17);
  for (int c = 0; c < sample.num_clusters(); ++c) {
    for (int i = sample.cluster_begin(c); i < sample.cluster_end(c); ++i) {
      out << sample.cluster_names()[c] << ',' << sample.y()[i] << ','
          << int(sample.t()[i]);
      for (int j = 0; j < sample.dim(); ++j) out << ',' << sample.x_at(i, j);
      if (sample.exposures_set()) out << ',' << sample.pi()[i];
      out << "\n";
    }
  }
}

OverlapDiagnostics overlap_check(const ClusteredSample& sample,
                                 double min_share) {
  if (!sample.exposures_set())
    throw DataError("overlap: exposures not set; apply a mapping first");
  const int K = sample.num_levels();
  const int N = sample.num_units();
  std::vector<std::array<int, 2>> counts(K, {0, 0});
  for (int i = 0; i < N; ++i) counts[sample.level_of(i)][sample.t()[i]]++;

  OverlapDiagnostics diag;
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t <= 1; ++t) {
      OverlapDiagnostics::Cell cell;
      cell.pi = sample.exposure_levels()[k];
      cell.t = t;
      cell.count = counts[k][t];
      cell.share = static_cast<double>(cell.count) / N;
      diag.min_share = std::min(diag.min_share, cell.share);
      diag.cells.push_back(cell);
      std::ostringstream os;
      os << "(pi=" << cell.pi << ", t=" << t << ")";
      if (cell.count == 0)
        throw NumericError("overlap: empty cell " + os.str() +
                           "; test statistics are undefined");
      if (cell.share < min_share) {
        os << " holds " << cell.count << "/" << N << " units ("
           << 100.0 * cell.share << "%), below the floor of "
           << 100.0 * min_share << "%";
        diag.warnings.push_back(os.str());
      }
    }
  }
  return diag;
}

}  // namespace hte
