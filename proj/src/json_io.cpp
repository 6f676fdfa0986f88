#include "mfspec/json_io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "mfspec/errors.hpp"

namespace mfspec {

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json states_json(const std::vector<Word>& states) {
  Json out = Json::array();
  for (const auto& s : states) out.push_back(word_to_string(s));
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json sft_to_json(const Sft& sft) {
  return Json{{"alphabet_size", sft.alphabet_size()}, {"transitions", sft.transitions()}};
}

Sft sft_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("sft", "expected an object");
  if (!j.contains("alphabet_size") || !j["alphabet_size"].is_number_integer()) {
    throw SchemaError("sft.alphabet_size", "expected an integer");
  }
  if (!j.contains("transitions") || !j["transitions"].is_array()) {
    throw SchemaError("sft.transitions", "expected an array of rows");
  }
  Sft::Matrix m;
  for (std::size_t i = 0; i < j["transitions"].size(); ++i) {
    const Json& row = j["transitions"][i];
    if (!row.is_array()) throw SchemaError("sft.transitions[" + std::to_string(i) + "]", "expected an array");
    std::vector<int> r;
    for (const Json& e : row) {
      if (!e.is_number_integer()) {
        throw SchemaError("sft.transitions[" + std::to_string(i) + "]", "entries must be integers");
      }
      r.push_back(e.get<int>());
    }
    m.push_back(std::move(r));
  }
  if (m.size() != j["alphabet_size"].get<std::size_t>()) {
    throw SchemaError("sft.transitions", "row count differs from alphabet_size");
  }
  return validate(m);
}

Json potential_to_json(const Potential& potential) {
  Json values = Json::object();
  for (std::size_t i = 0; i < potential.words().size(); ++i) {
    values[word_to_string(potential.words()[i])] = potential.value(i);
  }
  return Json{{"depth", potential.depth()}, {"values", values}};
}

Potential potential_from_json(const Sft& sft, const Json& j) {
  if (!j.is_object()) throw SchemaError("potential", "expected an object");
  if (!j.contains("depth") || !j["depth"].is_number_integer() || j["depth"].get<long>() < 1) {
    throw SchemaError("potential.depth", "expected a positive integer");
  }
  if (!j.contains("values") || !j["values"].is_object()) {
    throw SchemaError("potential.values", "expected an object of word -> value");
  }
  std::map<Word, double> values;
  for (const auto& [key, v] : j["values"].items()) {
    if (!v.is_number()) throw SchemaError("potential.values." + key, "expected a number");
    Word w;
    try {
      w = word_from_string(key);
    } catch (const InvalidArgument& e) {
      throw SchemaError("potential.values." + key, e.what());
    }
    values[w] = v.get<double>();
  }
  try {
    return Potential::from_values(sft, j["depth"].get<std::size_t>(), values);
  } catch (const Error& e) {
    throw SchemaError("potential.values", e.what());
  }
}

Json perron_to_json(const PerronData& pd) {
  return Json{{"states", states_json(pd.states)},  {"lambda", pd.lambda},
              {"right_vec", vector_json(pd.right)}, {"left_vec", vector_json(pd.left)},
              {"iterations", pd.iterations},       {"residual", pd.residual}};
}

Json markov_to_json(const MarkovMeasure& measure) {
  Json rows = Json::array();
  const auto& p = measure.stochastic();
  for (Eigen::Index i = 0; i < p.rows(); ++i) rows.push_back(vector_json(p.row(i).transpose()));
  return Json{{"states", states_json(measure.states())},
              {"stochastic", rows},
              {"stationary", vector_json(measure.stationary().transpose())}};
}

Json gibbs_to_json(const GibbsCertificate& cert) {
  return Json{{"c1", cert.c1},
              {"c2", cert.c2},
              {"checked_depth", cert.checked_depth},
              {"cylinders_checked", cert.cylinders_checked},
              {"worst_ratio_low", cert.worst_ratio_low},
              {"worst_ratio_high", cert.worst_ratio_high},
              {"symmetric_constants", cert.symmetric_constants},
              {"certified", cert.certified}};
}

std::string curve_to_csv(const TemperatureCurve& curve) {
  std::ostringstream out;
  out << kCurveCsvHeader << '\n';
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << format_double(curve.q[i]) << ',' << format_double(curve.T[i]) << ','
        << format_double(curve.alpha[i]) << ',' << format_double(curve.T_prime_fd[i]) << ','
        << format_double(curve.T_second_fd[i]) << ',' << format_double(curve.T_second_var[i]) << ','
        << format_double(curve.vd_of_nu_q[i]) << '\n';
  }
  return out.str();
}

Json curve_to_json(const TemperatureCurve& curve) {
  return Json{{"q", curve.q},
              {"T", curve.T},
              {"alpha", curve.alpha},
              {"T_prime_fd", curve.T_prime_fd},
              {"T_second_fd", curve.T_second_fd},
              {"T_second_var", curve.T_second_var},
              {"T_second_var_one_sided", curve.T_second_var_one_sided},
              {"T_second_var_symmetric", curve.T_second_var_symmetric},
              {"entropy", curve.entropy},
              {"lyapunov", curve.lyapunov},
              {"vd_nu_q", curve.vd_of_nu_q},
              {"convention_used", to_string(curve.convention_used)},
              {"fd_step", curve.fd_step}};
}

std::string spectrum_csv(const std::vector<SpectrumPoint>& points) {
  auto sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
  std::ostringstream out;
  out << "alpha,S\n";
  for (const auto& p : sorted) out << format_double(p.alpha) << ',' << format_double(p.S) << '\n';
  return out.str();
}

Json endpoints_to_json(const Endpoints& e) {
  return Json{{"periodic", {{"alpha1", e.periodic_alpha1},
                            {"alpha2", e.periodic_alpha2},
                            {"argmin_orbit", word_to_string(e.periodic_argmin)},
                            {"argmax_orbit", word_to_string(e.periodic_argmax)},
                            {"max_period", e.max_period},
                            {"orbits_scanned", e.orbits_scanned}}},
              {"probe", {{"alpha1", e.probe_alpha1}, {"alpha2", e.probe_alpha2}, {"q_probe", e.q_probe}}},
              {"cycle_extremes", {{"alpha1", e.cycle_alpha1}, {"alpha2", e.cycle_alpha2}}},
              {"spread", e.spread}};
}

Json legendre_to_json(const LegendreResiduals& r) {
  return Json{{"identity", r.identity},
              {"slope", r.slope},
              {"transform", r.transform},
              {"max_concavity", r.max_concavity}};
}

}  // namespace mfspec
