#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "hte/errors.hpp"
#include "hte/sample.hpp"

using namespace hte;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    path = std::string(std::tmpnam(nullptr)) + ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

ClusteredSample one_cluster(const std::vector<int>& t) {
  std::vector<std::string> key(t.size(), "a");
  key.push_back("b");
  key.push_back("b");
  std::vector<int> tt = t;
  tt.push_back(0);
  tt.push_back(1);
  std::vector<double> y(tt.size(), 0.0), x(tt.size(), 0.5), pi;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * (i % 7);
  return ClusteredSample::from_columns(key, y, tt, x, 1, pi);
}

}  // namespace

TEST_CASE("csv loading groups rows by cluster") {
  TempCsv f("cluster,y,t,x\nc1,1.0,1,0.2\nc1,2.0,0,0.3\nc2,3.0,1,0.4\nc2,4.0,0,0.5\n");
  CsvSchema schema;
  auto s = load_clustered_csv(f.path, schema);
  CHECK(s.num_units() == 4);
  CHECK(s.num_clusters() == 2);
  CHECK(s.dim() == 1);
  CHECK_FALSE(s.exposures_set());
  CHECK(s.y()[0] == 1.0);
  CHECK(s.y()[3] == 4.0);
}

TEST_CASE("csv non-binary treatment names the row") {
  TempCsv f("cluster,y,t,x\nc1,1.0,1,0.2\nc1,2.0,0,0.3\nc2,3.0,2,0.4\n");
  CsvSchema schema;
  try {
    load_clustered_csv(f.path, schema);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 4") != std::string::npos);
  }
}

TEST_CASE("csv schema and parse errors") {
  CsvSchema schema;
  {
    TempCsv f("cluster,outcome,t,x\nc1,1.0,1,0.2\n");
    CHECK_THROWS_AS(load_clustered_csv(f.path, schema), DataError);
  }
  {
    TempCsv f("cluster,y,t,x\nc1,abc,1,0.2\n");
    try {
      load_clustered_csv(f.path, schema);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("'y'") != std::string::npos);
    }
  }
  {
    TempCsv f("");
    CHECK_THROWS_AS(load_clustered_csv(f.path, schema), DataError);
  }
  CHECK_THROWS_AS(load_clustered_csv("/nonexistent/nope.csv", schema),
                  DataError);
}

TEST_CASE("csv with exposure column, delimiter, quotes") {
  CsvSchema schema;
  schema.exposure = "pi";
  schema.delimiter = ';';
  TempCsv f("cluster;y;t;x;pi\n\"c;1\";1.0;1;0.2;0.3\n\"c;1\";2.0;0;0.3;0.3\n"
            "c2;3.0;1;0.4;0.5\nc2;4.0;0;0.5;0.5\nc3;1.5;0;0.1;0.3\nc3;0.5;1;0.6;0.3\n");
  auto s = load_clustered_csv(f.path, schema);
  CHECK(s.num_clusters() == 3);
  CHECK(s.exposures_set());
  CHECK(s.num_levels() == 2);
  CHECK(s.cluster_names()[0] == "c;1");
}

TEST_CASE("round trip preserves numeric fields bit-exactly") {
  std::vector<std::string> key{"a", "a", "b", "b", "c", "c"};
  std::vector<double> y{0.1234567890123456, -2.5e-7, 3.0, 1e15, 0.3, -0.25};
  std::vector<int> t{0, 1, 1, 0, 0, 1};
  std::vector<double> x{0.1, 0.2, 0.30000000000000004, 0.4, 0.55, 0.6};
  std::vector<double> pi{0.5, 0.5, 0.5, 0.5, 1.0 / 3, 1.0 / 3};
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);

  const std::string path = std::string(std::tmpnam(nullptr)) + ".csv";
  write_clustered_csv(s, path);
  CsvSchema schema;
  schema.covariates = {"x1"};
  schema.exposure = "pi";
  auto back = load_clustered_csv(path, schema);
  std::remove(path.c_str());

  REQUIRE(back.num_units() == s.num_units());
  for (int i = 0; i < s.num_units(); ++i) {
    CHECK(back.y()[i] == s.y()[i]);
    CHECK(back.x_at(i, 0) == s.x_at(i, 0));
    CHECK(back.pi()[i] == s.pi()[i]);
    CHECK(back.t()[i] == s.t()[i]);
  }
}

TEST_CASE("treatment ratio exposure is constant within cluster") {
  auto s = one_cluster({1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
  auto e = s.with_exposure(ExposureMapping::treatment_ratio());
  for (int i = 0; i < 10; ++i) CHECK(e.pi()[i] == 0.5);
  // second cluster has ratio 0.5 as well
  CHECK(e.num_levels() == 1);
}

TEST_CASE("leave-one-out exposure by unit") {
  auto s = one_cluster({1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
  auto e = s.with_exposure(ExposureMapping::leave_one_out_ratio());
  CHECK(e.pi()[0] == doctest::Approx(4.0 / 9).epsilon(1e-15));
  CHECK(e.pi()[1] == doctest::Approx(5.0 / 9).epsilon(1e-15));
}

TEST_CASE("leave-one-out fails on a singleton cluster") {
  std::vector<std::string> key{"a", "b", "b"};
  std::vector<double> y{0, 0, 0}, x{0.1, 0.2, 0.3}, pi;
  std::vector<int> t{1, 0, 1};
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  CHECK_THROWS_AS(s.with_exposure(ExposureMapping::leave_one_out_ratio()),
                  DataError);
}

TEST_CASE("threshold exposure") {
  auto s = one_cluster({1, 0, 0, 1, 0, 0, 1, 0, 0, 0});  // ratio 0.30
  auto e = s.with_exposure(ExposureMapping::threshold(0.22));
  CHECK(e.pi()[0] == 1.0);
  // second cluster ratio 0.5 > 0.22 as well
  CHECK(e.pi()[10] == 1.0);
  auto e2 = s.with_exposure(ExposureMapping::threshold(0.40));
  CHECK(e2.pi()[0] == 0.0);
  CHECK(e2.pi()[10] == 1.0);
}

TEST_CASE("cluster-level mappings are idempotent") {
  auto s = one_cluster({1, 1, 0, 0, 1, 0, 1, 0, 1, 0});
  auto e1 = s.with_exposure(ExposureMapping::treatment_ratio());
  auto e2 = e1.with_exposure(ExposureMapping::treatment_ratio());
  CHECK(e1.pi() == e2.pi());
}

TEST_CASE("treatment ratio is invariant to unit permutations") {
  auto a = one_cluster({1, 1, 1, 0, 0, 0, 0, 0, 0, 0});
  auto b = one_cluster({0, 0, 0, 0, 0, 0, 0, 1, 1, 1});
  auto ea = a.with_exposure(ExposureMapping::treatment_ratio());
  auto eb = b.with_exposure(ExposureMapping::treatment_ratio());
  CHECK(ea.pi()[0] == eb.pi()[0]);
}

TEST_CASE("near-equal user exposures are canonicalized to one level") {
  std::vector<std::string> key{"a", "a", "b", "b", "c", "c"};
  std::vector<double> y(6, 0.0), x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<int> t{0, 1, 0, 1, 0, 1};
  std::vector<double> pi{0.3, 0.3, 0.3 + 1e-12, 0.3 + 1e-12, 0.6, 0.6};
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  CHECK(s.num_levels() == 2);
  CHECK(s.pi()[2] == s.pi()[0]);
}

TEST_CASE("validate enforces level count bounds") {
  std::vector<std::string> key{"a", "a", "b", "b"};
  std::vector<double> y(4, 0.0), x{0.1, 0.2, 0.3, 0.4};
  std::vector<int> t{0, 1, 0, 1};
  std::vector<double> pi{0.3, 0.3, 0.6, 0.6};
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  // K = 2 and C = 2 violates K < C
  CHECK_THROWS_AS(s.validate(), DataError);

  std::vector<double> pi_one(4, 0.3);
  auto s2 = ClusteredSample::from_columns(key, y, t, x, 1, pi_one);
  CHECK_THROWS_AS(s2.validate(), DataError);  // K = 1
}

TEST_CASE("overlap check tabulates cells and errors on empty ones") {
  // 4 clusters, 2 levels, both arms present everywhere
  std::vector<std::string> key;
  std::vector<double> y, x, pi;
  std::vector<int> t;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 10; ++i) {
      key.push_back("c" + std::to_string(c));
      y.push_back(0.0);
      x.push_back(0.05 * i + 0.1 * c);
      t.push_back(i % 2);
      pi.push_back(c % 2 ? 0.3 : 0.6);
    }
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  auto diag = overlap_check(s, 0.10);
  CHECK(diag.cells.size() == 4);
  CHECK(diag.warnings.empty());
  int total = 0;
  for (const auto& cell : diag.cells) total += cell.count;
  CHECK(total == s.num_units());

  // all treated units removed from level 0.3
  for (std::size_t i = 0; i < pi.size(); ++i)
    if (pi[i] == 0.3) t[i] = 0;
  auto bad = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  try {
    overlap_check(bad);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("pi=0.3, t=1") != std::string::npos);
  }
}

TEST_CASE("overlap warning below the share floor") {
  // level 0.6 gets a single treated unit out of 40: share 2.5%
  std::vector<std::string> key;
  std::vector<double> y, x, pi;
  std::vector<int> t;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 10; ++i) {
      key.push_back("c" + std::to_string(c));
      y.push_back(0.0);
      x.push_back(0.02 * i + 0.1 * c);
      const bool high = c % 2;
      pi.push_back(high ? 0.6 : 0.3);
      t.push_back(high ? (c == 1 && i == 0 ? 1 : 0) : i % 2);
    }
  auto s = ClusteredSample::from_columns(key, y, t, x, 1, pi);
  auto diag = overlap_check(s, 0.05);
  REQUIRE(diag.warnings.size() == 1);
  CHECK(diag.warnings[0].find("pi=0.6, t=1") != std::string::npos);
  CHECK(diag.min_share == doctest::Approx(1.0 / 40).epsilon(1e-12));
}

TEST_CASE("resample_clusters copies clusters verbatim") {
  auto s = one_cluster({1, 0, 1, 0, 1, 0, 1, 0, 1, 0})
               .with_exposure(ExposureMapping::treatment_ratio());
  std::vector<int> picks{1, 0, 1};
  std::vector<double> pis{0.25, 0.75, 0.75};
  auto r = ClusteredSample::resample_clusters(s, picks, pis);
  CHECK(r.num_clusters() == 3);
  CHECK(r.cluster_size(0) == s.cluster_size(1));
  CHECK(r.cluster_size(1) == s.cluster_size(0));
  for (int i = 0; i < r.cluster_size(1); ++i) {
    CHECK(r.y()[r.cluster_begin(1) + i] == s.y()[s.cluster_begin(0) + i]);
    CHECK(r.x_at(r.cluster_begin(1) + i, 0) == s.x_at(s.cluster_begin(0) + i, 0));
  }
  for (int i = r.cluster_begin(0); i < r.cluster_end(0); ++i)
    CHECK(r.pi()[i] == 0.25);
}
