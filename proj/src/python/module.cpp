#include <pybind11/numpy.h>

#include <algorithm>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hte/bootstrap.hpp"
#include "hte/errors.hpp"
#include "hte/inference.hpp"
#include "hte/report.hpp"
#include "hte/simulation.hpp"

namespace py = pybind11;
using namespace hte;

namespace {

ExposureMapping mapping_from(const std::string& kind, double cutpoint) {
  if (kind == "ratio" || kind == "treatment_ratio")
    return ExposureMapping::treatment_ratio();
  if (kind == "leave_one_out" || kind == "loo")
    return ExposureMapping::leave_one_out_ratio();
  if (kind == "threshold") return ExposureMapping::threshold(cutpoint);
  throw DataError("unknown exposure mapping '" + kind + "'");
}

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

ClusteredSample make_sample(const std::vector<std::string>& cluster,
                            DoubleArray y, IntArray t, DoubleArray x,
                            py::object pi) {
  const auto n = static_cast<std::size_t>(y.size());
  if (x.ndim() > 2) throw DataError("x must be 1-D or 2-D");
  const int d = x.ndim() == 2 ? static_cast<int>(x.shape(1)) : 1;

  std::vector<double> yv(y.data(), y.data() + y.size());
  std::vector<int> tv(t.data(), t.data() + t.size());
  std::vector<double> xv(x.data(), x.data() + x.size());
  std::vector<double> piv;
  if (!pi.is_none()) {
    DoubleArray pb = pi.cast<DoubleArray>();
    piv.assign(pb.data(), pb.data() + pb.size());
    if (piv.size() != n) throw DataError("pi length mismatch");
  }
  return ClusteredSample::from_columns(cluster, yv, tv, xv, d, piv);
}

TestConfig config_from_kwargs(double kappa, double explicit_h, int grid_points,
                              double alpha, int mass_floor,
                              bool covariance_correction,
                              const std::string& bandwidth_base,
                              std::uint64_t grid_seed) {
  TestConfig cfg;
  cfg.bandwidth_rule.kappa_h = kappa;
  cfg.bandwidth_rule.base = bandwidth_base == "units"
                                ? BandwidthRule::Base::Units
                                : BandwidthRule::Base::Clusters;
  cfg.explicit_h = explicit_h;
  cfg.grid_points = grid_points;
  cfg.alpha = alpha;
  cfg.mass_floor = mass_floor;
  cfg.covariance_correction = covariance_correction;
  cfg.grid_seed = grid_seed;
  return cfg;
}

py::dict result_to_dict(const TestResult& r, const ClusteredSample& s) {
  py::dict d;
  d["hypothesis"] = hypothesis_name(r.hypothesis);
  d["raw"] = r.statistic.raw;
  d["bias"] = r.statistic.bias;
  d["scale"] = r.statistic.scale;
  d["studentized"] = r.statistic.studentized;
  d["p_value"] = r.p_value;
  d["reject"] = r.reject;
  d["json"] = to_json(r, s).dump();
  return d;
}

py::dict mtp_to_dict(const MtpResult& m) {
  py::dict d;
  d["p_values"] = py::make_tuple(m.p_values[0], m.p_values[1]);
  d["reject"] = py::make_tuple(m.reject[0], m.reject[1]);
  d["classification"] = heterogeneity_source_name(m.classification);
  return d;
}

py::array_t<double> owned_array(const std::vector<double>& v) {
  py::array_t<double> out({static_cast<py::ssize_t>(v.size())},
                          {static_cast<py::ssize_t>(sizeof(double))});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict bootstrap_to_dict(const BootstrapResult& b) {
  py::dict d;
  d["observed"] = b.observed;
  d["p_value"] = b.p_value;
  d["reps_completed"] = b.reps_completed;
  d["reps_failed"] = b.reps_failed;
  d["draws"] = owned_array(b.draws);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kernel-based tests for heterogeneous treatment effects under "
            "clustered interference";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<ClusteredSample>(m, "ClusteredSample")
      .def(py::init(&make_sample), py::arg("cluster"), py::arg("y"),
           py::arg("t"), py::arg("x"), py::arg("pi") = py::none())
      .def_property_readonly("n_units", &ClusteredSample::num_units)
      .def_property_readonly("n_clusters", &ClusteredSample::num_clusters)
      .def_property_readonly("d", &ClusteredSample::dim)
      .def_property_readonly("exposure_levels",
                             &ClusteredSample::exposure_levels)
      .def_property_readonly("exposures_set", &ClusteredSample::exposures_set)
      .def("with_exposure",
           [](const ClusteredSample& s, const std::string& kind,
              double cutpoint) {
             return s.with_exposure(mapping_from(kind, cutpoint));
           },
           py::arg("kind") = "ratio", py::arg("cutpoint") = 0.0)
      .def("pi", [](const ClusteredSample& s) { return owned_array(s.pi()); });

  m.def("load_csv",
        [](const std::string& path, const std::string& cluster,
           const std::string& y, const std::string& t,
           const std::vector<std::string>& x, py::object pi, char delimiter) {
          CsvSchema schema;
          schema.cluster = cluster;
          schema.outcome = y;
          schema.treatment = t;
          schema.covariates = x;
          schema.delimiter = delimiter;
          if (!pi.is_none()) schema.exposure = pi.cast<std::string>();
          return load_clustered_csv(path, schema);
        },
        py::arg("path"), py::arg("cluster") = "cluster", py::arg("y") = "y",
        py::arg("t") = "t", py::arg("x") = std::vector<std::string>{"x"},
        py::arg("pi") = py::none(), py::arg("delimiter") = ',');

  m.def("eval_kernel", [](std::vector<double> u) {
    return eval_kernel(std::span<const double>(u));
  });
  m.def("kernel_l2", &kernel_l2);
  m.def("kernel_convolution", [](std::vector<double> t) {
    return kernel_convolution(std::span<const double>(t));
  });
  m.def("gaussian_abs_cov", &gaussian_abs_cov);
  m.def("normal_cdf", &normal_cdf);
  m.def("bandwidth",
        [](const ClusteredSample& s, double kappa, const std::string& base) {
          BandwidthRule rule;
          rule.kappa_h = kappa;
          rule.base = base == "units" ? BandwidthRule::Base::Units
                                      : BandwidthRule::Base::Clusters;
          return bandwidth(s, rule).h;
        },
        py::arg("sample"), py::arg("kappa") = 3.0,
        py::arg("base") = "clusters");

#define HTE_CONFIG_ARGS                                                       \
  py::arg("kappa") = 3.0, py::arg("h") = 0.0, py::arg("grid_points") = 100,  \
  py::arg("alpha") = 0.05, py::arg("mass_floor") = 5,                        \
  py::arg("covariance_correction") = true,                                   \
  py::arg("bandwidth_base") = "clusters", py::arg("grid_seed") = 12345

  m.def("s1_test",
        [](const ClusteredSample& s, double kappa, double h, int grid_points,
           double alpha, int mass_floor, bool cov, const std::string& base,
           std::uint64_t grid_seed) {
          const auto cfg = config_from_kwargs(kappa, h, grid_points, alpha,
                                              mass_floor, cov, base, grid_seed);
          return result_to_dict(s1_test(s, cfg), s);
        },
        py::arg("sample"), HTE_CONFIG_ARGS);

  m.def("s2_test",
        [](const ClusteredSample& s, double kappa, double h, int grid_points,
           double alpha, int mass_floor, bool cov, const std::string& base,
           std::uint64_t grid_seed) {
          const auto cfg = config_from_kwargs(kappa, h, grid_points, alpha,
                                              mass_floor, cov, base, grid_seed);
          return result_to_dict(s2_test(s, cfg), s);
        },
        py::arg("sample"), HTE_CONFIG_ARGS);

  m.def("run_tests",
        [](const ClusteredSample& s, double kappa, double h, int grid_points,
           double alpha, int mass_floor, bool cov, const std::string& base,
           std::uint64_t grid_seed) {
          const auto cfg = config_from_kwargs(kappa, h, grid_points, alpha,
                                              mass_floor, cov, base, grid_seed);
          const TestPair pair = run_both_tests(s, cfg);
          const MtpResult mtp =
              holm(pair.s1.p_value, pair.s2.p_value, cfg.alpha);
          py::dict out;
          out["s1"] = result_to_dict(pair.s1, s);
          out["s2"] = result_to_dict(pair.s2, s);
          out["holm"] = mtp_to_dict(mtp);
          return out;
        },
        py::arg("sample"), HTE_CONFIG_ARGS);

  m.def("holm", [](double p_exposure, double p_pretreatment, double alpha) {
    return mtp_to_dict(holm(p_exposure, p_pretreatment, alpha));
  }, py::arg("p_exposure"), py::arg("p_pretreatment"), py::arg("alpha") = 0.05);

  m.def("bootstrap_s1",
        [](const ClusteredSample& s, int reps, std::uint64_t seed, int workers,
           double kappa, double h, int grid_points, double alpha,
           int mass_floor, bool cov, const std::string& base,
           std::uint64_t grid_seed) {
          const auto cfg = config_from_kwargs(kappa, h, grid_points, alpha,
                                              mass_floor, cov, base, grid_seed);
          BootstrapConfig bc;
          bc.reps = reps;
          bc.seed = seed;
          bc.workers = workers;
          return bootstrap_to_dict(pairs_cluster_bootstrap_s1(s, cfg, bc));
        },
        py::arg("sample"), py::arg("reps") = 399, py::arg("seed") = 0,
        py::arg("workers") = 0, HTE_CONFIG_ARGS);

  m.def("bootstrap_s2",
        [](const ClusteredSample& s, int reps, std::uint64_t seed, int workers,
           double kappa, double h, int grid_points, double alpha,
           int mass_floor, bool cov, const std::string& base,
           std::uint64_t grid_seed) {
          const auto cfg = config_from_kwargs(kappa, h, grid_points, alpha,
                                              mass_floor, cov, base, grid_seed);
          BootstrapConfig bc;
          bc.reps = reps;
          bc.seed = seed;
          bc.workers = workers;
          return bootstrap_to_dict(wild_cluster_bootstrap_s2(s, cfg, bc));
        },
        py::arg("sample"), py::arg("reps") = 399, py::arg("seed") = 0,
        py::arg("workers") = 0, HTE_CONFIG_ARGS);

#undef HTE_CONFIG_ARGS

  m.def("gen_dgp",
        [](int clusters, int cluster_size, std::vector<double> levels,
           double beta0, double beta1, const std::string& cate_form,
           double error_sd, double x_correlation, int d, std::uint64_t seed) {
          DgpConfig cfg;
          cfg.clusters = clusters;
          cfg.cluster_size = cluster_size;
          cfg.exposure_levels = std::move(levels);
          cfg.beta0 = beta0;
          cfg.beta1 = beta1;
          if (cate_form == "cosine")
            cfg.cate_form = DgpConfig::CateForm::CosineNonlinear;
          else if (cate_form == "multix")
            cfg.cate_form = DgpConfig::CateForm::LinearMultiX;
          cfg.error_sd = error_sd;
          cfg.x_correlation = x_correlation;
          cfg.d = d;
          return gen_dgp(cfg, seed);
        },
        py::arg("clusters") = 150, py::arg("cluster_size") = 10,
        py::arg("levels") = std::vector<double>{0.3, 0.4, 0.5, 0.6},
        py::arg("beta0") = 1.0, py::arg("beta1") = 0.0,
        py::arg("cate_form") = "linear",
        py::arg("error_sd") = 0.1,
        py::arg("x_correlation") = 0.2, py::arg("d") = 1, py::arg("seed") = 1);

  m.def("ols_cluster_comparison", [](const ClusteredSample& s) {
    const ParametricResult r = ols_cluster_comparison(s);
    py::dict d;
    d["terms"] = r.names;
    d["coef"] = r.coef;
    d["se"] = r.se;
    d["t"] = r.t_stat;
    d["p"] = r.p_value;
    d["interaction_wald"] = r.interaction_wald;
    d["interaction_p"] = r.interaction_p;
    d["json"] = to_json(r).dump();
    return d;
  });

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
