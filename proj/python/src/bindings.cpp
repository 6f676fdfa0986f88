#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfspec/errors.hpp"
#include "mfspec/json_io.hpp"
#include "mfspec/orbit_lab.hpp"
#include "mfspec/spectrum.hpp"
#include "mfspec/temperature.hpp"
#include "mfspec/transfer.hpp"

namespace py = pybind11;
using namespace mfspec;

namespace {

py::object to_python(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null:
      return py::none();
    case Json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case Json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case Json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case Json::value_t::number_float:
      return py::float_(j.get<double>());
    case Json::value_t::string:
      return py::str(j.get<std::string>());
    case Json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_python(v));
      return out;
    }
    default: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
      return out;
    }
  }
}

Potential potential_from_map(const Sft& sft, std::size_t depth, const std::map<std::string, double>& values) {
  std::map<Word, double> words;
  for (const auto& [text, v] : values) words[word_from_string(text)] = v;
  return Potential::from_values(sft, depth, words);
}

PotentialFamily make_family(const Sft::Matrix& transitions, std::size_t g_depth,
                            const std::map<std::string, double>& g, std::size_t jac_depth,
                            const std::map<std::string, double>& jac) {
  const Sft sft = validate(transitions);
  return PotentialFamily::make(potential_from_map(sft, g_depth, g),
                               JacobianPotential(potential_from_map(sft, jac_depth, jac)));
}

Json oscillation_to_json(const OscillationRecord& r) {
  Json boundaries = Json::array();
  for (const auto& [pos, ratio] : r.boundaries) boundaries.push_back({pos, ratio});
  return {{"ratio_a", r.ratio_a},     {"ratio_b", r.ratio_b},     {"tail_min", r.tail_min},
          {"tail_max", r.tail_max},   {"spread", r.spread},       {"threshold", r.threshold},
          {"certified", r.certified}, {"admissible", r.admissible}, {"horizon", r.horizon},
          {"boundaries", boundaries}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Thermodynamic formalism and multifractal spectra on subshifts of finite type.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base);
  py::register_exception<ReducibleMatrix>(m, "ReducibleMatrix", base);
  py::register_exception<InadmissibleWord>(m, "InadmissibleWord", base);
  py::register_exception<BracketingFailure>(m, "BracketingFailure", base);
  py::register_exception<DegenerateSpectrum>(m, "DegenerateSpectrum", base);
  py::register_exception<InfeasibleConstraint>(m, "InfeasibleConstraint", base);
  py::register_exception<EqualRatios>(m, "EqualRatios", base);

  m.def("symbol_alphabet", [] { return std::string(symbol_alphabet()); });
  m.def("format_double", &format_double);
  m.def("make_grid", &make_grid, py::arg("min"), py::arg("max"), py::arg("step"));

  py::class_<PotentialFamily>(m, "Family")
      .def(py::init(&make_family), py::arg("transitions"), py::arg("g_depth"), py::arg("g"), py::arg("jac_depth"),
           py::arg("jac"))
      .def_property_readonly("alphabet_size", [](const PotentialFamily& f) { return f.sft().alphabet_size(); })
      .def_property_readonly("depth", &PotentialFamily::depth)
      .def_property_readonly("normalization_shift", &PotentialFamily::normalization_shift);

  m.def("pressure", [](const PotentialFamily& f, double q, double t) { return pressure(f.sft(), family_phi(f, q, t)); },
        py::arg("family"), py::arg("q"), py::arg("t"));
  m.def("solve_T", [](const PotentialFamily& f, double q) { return solve_T(f, q); }, py::arg("family"), py::arg("q"));
  m.def("alpha", &alpha, py::arg("family"), py::arg("q"));
  m.def(
      "temperature_curve",
      [](const PotentialFamily& f, const std::vector<double>& grid) {
        return to_python(curve_to_json(temperature_curve(f, grid)));
      },
      py::arg("family"), py::arg("q_grid"));
  m.def(
      "legendre_check",
      [](const PotentialFamily& f, const std::vector<double>& grid) {
        return to_python(legendre_to_json(legendre_check(temperature_curve(f, grid))));
      },
      py::arg("family"), py::arg("q_grid"));
  m.def(
      "endpoints",
      [](const PotentialFamily& f, std::size_t max_period, double q_probe) {
        return to_python(endpoints_to_json(endpoints(f, max_period, q_probe)));
      },
      py::arg("family"), py::arg("max_period"), py::arg("q_probe") = 40.0);
  m.def(
      "gibbs_certificate",
      [](const PotentialFamily& f, double q, std::size_t depth) {
        return to_python(gibbs_to_json(gibbs_certificate(f.sft(), family_phi(f, q, solve_T(f, q)), depth)));
      },
      py::arg("family"), py::arg("q"), py::arg("depth"));
  m.def(
      "conformality_defect",
      [](const PotentialFamily& f, double q, std::size_t depth) {
        return conformality_check(f.sft(), family_phi(f, q, solve_T(f, q)), depth);
      },
      py::arg("family"), py::arg("q"), py::arg("depth"));
  m.def(
      "level_set_concentration",
      [](const PotentialFamily& f, double q, std::size_t n, std::size_t samples, double epsilon, std::uint64_t seed) {
        const auto r = level_set_concentration(f, q, n, samples, epsilon, seed);
        py::dict out;
        out["fraction"] = r.fraction;
        out["alpha"] = r.alpha;
        out["mean_ratio"] = r.mean_ratio;
        out["stddev_ratio"] = r.stddev_ratio;
        out["n"] = r.n;
        out["samples"] = r.samples;
        out["epsilon"] = r.epsilon;
        return out;
      },
      py::arg("family"), py::arg("q"), py::arg("n"), py::arg("samples"), py::arg("epsilon"), py::arg("seed"));
  m.def(
      "irregular_point",
      [](const PotentialFamily& f, const std::string& a, const std::string& b, double growth, std::size_t horizon) {
        return to_python(oscillation_to_json(
            irregular_point(f, word_from_string(a), word_from_string(b), BlockSchedule::geometric(growth, horizon),
                            horizon)));
      },
      py::arg("family"), py::arg("orbit_a"), py::arg("orbit_b"), py::arg("growth_factor"), py::arg("horizon"));
}
