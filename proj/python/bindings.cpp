#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dive/dive.hpp"
#include "dive/effects.hpp"
#include "dive/errors.hpp"
#include "dive/io.hpp"
#include "dive/scm_sim.hpp"
#include "dive/stat_tests.hpp"

namespace py = pybind11;
using namespace dive;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const Array& a) {
  const auto buf = a.unchecked<1>();
  std::vector<double> out(static_cast<std::size_t>(buf.shape(0)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) out[static_cast<std::size_t>(i)] = buf(i);
  return out;
}

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class F>
Array map_array(const Array& x, F f) {
  const auto in = to_vec(x);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return to_array(out);
}

// masked points become NaN
Array curve_values(const EffectCurve& c) {
  std::vector<double> out;
  out.reserve(c.size());
  for (const auto& v : c.values) out.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
  return to_array(out);
}

InstrumentType parse_z_type(const std::string& s, const std::vector<double>& z) {
  if (s == "auto") return infer_instrument_type(z);
  if (s == "continuous") return InstrumentType::continuous;
  if (s == "discrete") return InstrumentType::discrete;
  throw DomainError("z_type must be auto, continuous or discrete");
}

Aggregation parse_beta(const std::string& s) {
  if (s == "sum") return Aggregation::sum;
  if (s == "max") return Aggregation::max;
  throw DomainError("beta must be sum or max");
}

IVDataset make_dataset(const Array& z, const py::array_t<int, py::array::forcecast>& d, const Array& y,
                       const std::string& z_type) {
  auto zv = to_vec(z);
  const auto dv = d.unchecked<1>();
  std::vector<int> di(static_cast<std::size_t>(dv.shape(0)));
  for (py::ssize_t i = 0; i < dv.shape(0); ++i) di[static_cast<std::size_t>(i)] = dv(i);
  const auto type = parse_z_type(z_type, zv);
  return IVDataset(Instrument::scalar(std::move(zv), type), std::move(di), to_vec(y));
}

// A fit together with the configuration that produced it.
struct FitResult {
  DiveFit fit;
  nlohmann::json config;
  std::uint64_t seed = 0;

  std::string to_json() const {
    io::RunManifest m{"fit", config, seed};
    auto j = io::to_json(fit);
    j["config"] = config;
    j["manifest"] = io::to_json(m);
    return j.dump();
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributional IV estimation with monotone Bernstein CDFs";

  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<DegenerateCdfError>(m, "DegenerateCdfError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<ParametricCDF>(m, "BernsteinCdf")
      .def_property_readonly("lower", &ParametricCDF::lower)
      .def_property_readonly("upper", &ParametricCDF::upper)
      .def_property_readonly("order", &ParametricCDF::order)
      .def_property_readonly("link", [](const ParametricCDF& f) { return std::string(f.link().name()); })
      .def_property_readonly("theta",
                             [](const ParametricCDF& f) {
                               const auto t = f.coeffs().theta();
                               return to_array({t.begin(), t.end()});
                             })
      .def("cdf", [](const ParametricCDF& f, const Array& y) { return map_array(y, [&](double v) { return f.cdf(v); }); })
      .def("pdf", [](const ParametricCDF& f, const Array& y) { return map_array(y, [&](double v) { return f.pdf(v); }); })
      .def("quantile",
           [](const ParametricCDF& f, const Array& tau) { return map_array(tau, [&](double v) { return f.quantile(v); }); })
      .def("to_json", [](const ParametricCDF& f) { return io::to_json(f).dump(); });

  py::class_<FitResult>(m, "DiveFit")
      .def_property_readonly("F0", [](const FitResult& r) { return r.fit.f0; })
      .def_property_readonly("F1", [](const FitResult& r) { return r.fit.f1; })
      .def_property_readonly("converged", [](const FitResult& r) { return r.fit.converged; })
      .def_property_readonly("lambda_init", [](const FitResult& r) { return r.fit.lambda_init; })
      .def_property_readonly("lambda_final", [](const FitResult& r) { return r.fit.lambda_final; })
      .def_property_readonly("lambda_path", [](const FitResult& r) { return r.fit.lambda_path; })
      .def_property_readonly("p_uniform", [](const FitResult& r) { return r.fit.p_uniform; })
      .def_property_readonly("p_independent", [](const FitResult& r) { return r.fit.p_independent; })
      .def_property_readonly("restarts_used", [](const FitResult& r) { return r.fit.restarts_used; })
      .def_property_readonly("warnings", [](const FitResult& r) { return r.fit.warnings; })
      .def("to_json", &FitResult::to_json);

  py::class_<TestResult>(m, "TestResult")
      .def_readonly("statistic", &TestResult::statistic)
      .def_readonly("p_value", &TestResult::p_value)
      .def_readonly("replicates", &TestResult::replicates)
      .def_readonly("seed", &TestResult::seed);

  m.def(
      "simulate",
      [](const std::string& scenario, std::size_t n, std::uint64_t seed) {
        const auto data = sample(parse_scenario(scenario), n, seed);
        std::vector<double> d(data.d().begin(), data.d().end());
        py::dict out;
        out["z"] = to_array(data.z().values);
        out["d"] = to_array(d);
        out["y"] = to_array(data.y());
        return out;
      },
      py::arg("scenario"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "true_cdf",
      [](const std::string& scenario, int d, const Array& y) {
        const auto scn = parse_scenario(scenario);
        return map_array(y, [&](double v) { return true_cdf(scn, d, v); });
      },
      py::arg("scenario"), py::arg("d"), py::arg("y"));

  m.def(
      "fit",
      [](const Array& z, const py::array_t<int, py::array::forcecast>& d, const Array& y, int order, double alpha,
         int max_restarts, double nu, const std::string& link, const std::string& beta, std::uint64_t seed,
         const std::string& z_type, double learning_rate, int max_epochs, int cvm_replicates, int permutations) {
        const auto data = make_dataset(z, d, y, z_type);
        DiveConfig config;
        config.order = order;
        config.alpha = alpha;
        config.max_restarts = max_restarts;
        config.nu = nu;
        config.link = LinkFunction::parse(link);
        config.beta = parse_beta(beta);
        config.seed = seed;
        config.optimizer.learning_rate = learning_rate;
        config.optimizer.max_epochs = max_epochs;
        config.cvm_replicates = cvm_replicates;
        config.hsic_permutations = permutations;
        auto config_json = io::to_json(config);
        config_json["z_type"] = data.z().type == InstrumentType::discrete ? "discrete" : "continuous";
        py::gil_scoped_release release;
        return FitResult{dive_fit(data, config), std::move(config_json), seed};
      },
      py::arg("z"), py::arg("d"), py::arg("y"), py::kw_only(), py::arg("order") = 50, py::arg("alpha") = 0.1,
      py::arg("max_restarts") = 10, py::arg("nu") = 5.0, py::arg("link") = "standard-normal",
      py::arg("beta") = "sum", py::arg("seed") = 0, py::arg("z_type") = "auto", py::arg("learning_rate") = 0.1,
      py::arg("max_epochs") = 1000, py::arg("cvm_replicates") = kDefaultCvmReplicates,
      py::arg("permutations") = kDefaultPermutations);

  m.def(
      "dte", [](const FitResult& f, const Array& y) { return curve_values(dte(f.fit.f0, f.fit.f1, to_vec(y))); },
      py::arg("fit"), py::arg("y"));
  m.def(
      "qte", [](const FitResult& f, const Array& tau) { return curve_values(qte(f.fit.f0, f.fit.f1, to_vec(tau))); },
      py::arg("fit"), py::arg("tau"));
  m.def(
      "dok", [](const FitResult& f, const Array& y) { return curve_values(dok(f.fit.f0, f.fit.f1, to_vec(y))); },
      py::arg("fit"), py::arg("y"));
  m.def(
      "logit_ce", [](const FitResult& f, const Array& y) { return curve_values(logit_ce(f.fit.f0, f.fit.f1, to_vec(y))); },
      py::arg("fit"), py::arg("y"));
  m.def(
      "ace", [](const FitResult& f, std::size_t points) { return ace(f.fit.f0, f.fit.f1, points); }, py::arg("fit"),
      py::arg("points") = 512);

  m.def(
      "cvm_statistic", [](const Array& r) { return cvm_statistic(to_vec(r)); }, py::arg("r"));
  m.def(
      "hsic_statistic",
      [](const Array& r, const Array& z, bool discrete) {
        const auto type = discrete ? InstrumentType::discrete : InstrumentType::continuous;
        return hsic_statistic(to_vec(r), Instrument::scalar(to_vec(z), type), KernelSpec::gaussian_median(),
                              KernelSpec::for_instrument(type));
      },
      py::arg("r"), py::arg("z"), py::arg("discrete") = false);
  m.def(
      "cvm_test",
      [](const Array& r, int replicates, std::uint64_t seed) { return cvm_test(to_vec(r), replicates, seed); },
      py::arg("r"), py::arg("replicates") = kDefaultCvmReplicates, py::arg("seed") = 0);
  m.def(
      "hsic_test",
      [](const Array& r, const Array& z, int permutations, std::uint64_t seed, bool discrete) {
        const auto type = discrete ? InstrumentType::discrete : InstrumentType::continuous;
        return hsic_perm_test(to_vec(r), Instrument::scalar(to_vec(z), type), permutations, seed,
                              KernelSpec::gaussian_median(), KernelSpec::for_instrument(type));
      },
      py::arg("r"), py::arg("z"), py::arg("permutations") = kDefaultPermutations, py::arg("seed") = 0,
      py::arg("discrete") = false);
}
