#include "app.hpp"

#include <unistd.h>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "mfspec/errors.hpp"
#include "mfspec/orbit_lab.hpp"
#include "mfspec/spectrum.hpp"
#include "mfspec/transfer.hpp"

#ifndef MFSPEC_VERSION
#define MFSPEC_VERSION "0.0.0"
#endif

namespace mfspec::app {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// nlohmann reports a byte offset; turn it into line:column for the message.
Json parse_text(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SchemaError(where + ":" + std::to_string(line) + ":" + std::to_string(column),
                      "invalid JSON (" + std::string(e.what()) + ")");
  }
}

// Replaces {"file": "..."} with the parsed contents of that file.
Json resolve_reference(const Json& j, const fs::path& base_dir, const std::string& where) {
  if (!j.is_object() || !j.contains("file")) return j;
  if (!j["file"].is_string()) throw SchemaError(where + ".file", "expected a path string");
  const fs::path path = base_dir / j["file"].get<std::string>();
  return parse_text(read_text(path), path.string());
}

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw SchemaError(where.empty() ? key : where + "." + key, "unknown field");
  }
}

const Json& require_object(const Json& parent, const std::string& key, const std::string& where) {
  if (!parent.contains(key)) throw SchemaError(where, "missing required field");
  if (!parent[key].is_object()) throw SchemaError(where, "expected an object");
  return parent[key];
}

double number(const Json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw SchemaError(where + "." + key, "expected a number");
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) throw SchemaError(where + "." + key, "must be finite");
  return v;
}

std::size_t count(const Json& obj, const std::string& key, const std::string& where, std::size_t fallback,
                  std::size_t lo, std::size_t hi) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer() || obj[key].get<long long>() < 0) {
    throw SchemaError(where + "." + key, "expected a non-negative integer");
  }
  const auto v = obj[key].get<std::size_t>();
  if (v < lo || v > hi) {
    throw SchemaError(where + "." + key,
                      "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

Word orbit_word(const Json& obj, const std::string& key, const std::string& where, const Sft& sft) {
  if (!obj[key].is_string()) throw SchemaError(where + "." + key, "expected a symbol string");
  Word w;
  try {
    w = word_from_string(obj[key].get<std::string>());
  } catch (const InvalidArgument& e) {
    throw SchemaError(where + "." + key, e.what());
  }
  if (w.empty() || !sft.cyclically_admissible(w)) {
    throw SchemaError(where + "." + key, "not a cyclically admissible word");
  }
  return w;
}

Potential parse_potential(const Sft& sft, const Json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  if (j.contains("constant")) {
    reject_unknown(j, {"constant"}, where);
    return Potential::constant(sft, 1, number(j, "constant", where, 0.0));
  }
  if (j.contains("per_symbol")) {
    reject_unknown(j, {"per_symbol"}, where);
    const Json& arr = j["per_symbol"];
    if (!arr.is_array() || arr.size() != sft.alphabet_size()) {
      throw SchemaError(where + ".per_symbol", "expected one number per symbol");
    }
    std::vector<double> values;
    for (const Json& v : arr) {
      if (!v.is_number()) throw SchemaError(where + ".per_symbol", "entries must be numbers");
      values.push_back(v.get<double>());
    }
    return Potential::per_symbol(sft, values);
  }
  reject_unknown(j, {"depth", "values"}, where);
  try {
    return potential_from_json(sft, j);
  } catch (const SchemaError& e) {
    // Re-root the loader's "potential..." path at this field.
    const std::string msg = std::string(e.what()).substr(e.where().size() + 2);
    throw SchemaError(where + e.where().substr(std::string("potential").size()), msg);
  }
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
  return buf;
}

double tol(const RunConfig& c, const char* key) { return c.tolerances.at(key); }

Json tol_json(const RunConfig& c, std::initializer_list<const char*> keys) {
  Json out = Json::object();
  for (const char* k : keys) out[k] = tol(c, k);
  return out;
}

std::uint64_t sub_seed(const RunConfig& c, std::uint64_t index) {
  return Rng::derive(c.sampling.seed, index).engine()();
}

bool is_degenerate_range(const RunConfig& c) {
  const auto r = cycle_ratio_range(c.family.g().scaled(-1.0), c.family.jac());
  return r.max - r.min <= 1e-9;
}

CheckResult check_temperature(const RunConfig& c, const TemperatureCurve& curve) {
  CheckResult r;
  r.name = "temperature";
  const double t1 = solve_T(c.family, 1.0);
  double max_p = 0.0, max_partial = 0.0, min_second_diff = std::numeric_limits<double>::infinity();
  double max_t_prime = 0.0, max_t_second = 0.0;
  bool decreasing = true;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double q = curve.q[i];
    max_p = std::max(max_p, std::abs(pressure(c.family.sft(), family_phi(c.family, q, curve.T[i]))));
    const auto d = pressure_partials(c.family, q, curve.T[i]);
    max_partial = std::max({max_partial, std::abs(d.dP_dt_fd - d.dP_dt_exact), std::abs(d.dP_dq_fd - d.dP_dq_exact)});
    max_t_prime = std::max(max_t_prime, std::abs(curve.T_prime_fd[i] + curve.alpha[i]));
    max_t_second = std::max(max_t_second, std::abs(curve.T_second_fd[i] - curve.T_second_var[i]));
    if (i > 0 && !(curve.T[i] < curve.T[i - 1])) decreasing = false;
    if (i > 0 && i + 1 < curve.size()) {
      min_second_diff = std::min(min_second_diff, curve.T[i + 1] - 2.0 * curve.T[i] + curve.T[i - 1]);
    }
  }
  if (!std::isfinite(min_second_diff)) min_second_diff = 0.0;
  r.measured = {{"T_at_1", t1},
                {"max_pressure_residual", max_p},
                {"strictly_decreasing", decreasing},
                {"min_second_difference", min_second_diff},
                {"max_T_prime_plus_alpha", max_t_prime},
                {"max_partial_error", max_partial},
                {"max_T_second_fd_minus_var", max_t_second},
                {"convention_used", to_string(curve.convention_used)},
                {"grid_points", curve.size()}};
  r.tolerances = tol_json(c, {"t_at_one", "pressure_zero", "convexity", "t_prime", "partials", "t_second"});
  r.pass = std::abs(t1) <= tol(c, "t_at_one") && max_p <= tol(c, "pressure_zero") && decreasing &&
           min_second_diff >= -tol(c, "convexity") && max_t_prime <= tol(c, "t_prime") &&
           max_partial <= tol(c, "partials") && max_t_second <= tol(c, "t_second");
  return r;
}

CheckResult check_gibbs(const RunConfig& c, const TemperatureCurve&) {
  CheckResult r;
  r.name = "gibbs";
  const Sft& sft = c.family.sft();
  Json per_q = Json::array();
  bool all = true;
  for (double q : c.check_q) {
    const auto phi = family_phi(c.family, q, solve_T(c.family, q));
    const auto cert = gibbs_certificate(sft, phi, c.depths.gibbs_depth);
    Json entry = gibbs_to_json(cert);
    entry["q"] = q;
    per_q.push_back(entry);
    all = all && cert.certified;
  }
  // Negative control: a random Markov measure against the q = 0 constants.
  const auto phi0 = family_phi(c.family, 0.0, solve_T(c.family, 0.0));
  std::mt19937_64 rng(sub_seed(c, 1));
  const auto wrong = random_markov_measure(sft, state_length(phi0.depth()), rng);
  const auto control = gibbs_check_measure(wrong, phi0, 30);
  r.measured = {{"certificates", per_q},
                {"negative_control", {{"rejected", !control.certified},
                                      {"failing_depth", control.checked_depth},
                                      {"worst_ratio_low", control.worst_ratio_low},
                                      {"worst_ratio_high", control.worst_ratio_high}}}};
  r.tolerances = {{"relative_slack", 1e-9}, {"depth", c.depths.gibbs_depth}, {"negative_control_depth", 30}};
  r.pass = all && !control.certified;
  if (!all) r.detail = "a ratio fell outside [c1, c2]";
  if (control.certified) r.detail = "negative control was not rejected by depth 30";
  return r;
}

CheckResult check_conformality(const RunConfig& c, const TemperatureCurve&) {
  CheckResult r;
  r.name = "conformality";
  Json per_q = Json::array();
  double worst = 0.0;
  for (double q : c.check_q) {
    const auto phi = family_phi(c.family, q, solve_T(c.family, q));
    const double defect = conformality_check(c.family.sft(), phi, c.depths.conformality_depth);
    per_q.push_back({{"q", q}, {"defect", defect}});
    worst = std::max(worst, defect);
  }
  r.measured = {{"defects", per_q}, {"max_defect", worst}, {"depth", c.depths.conformality_depth}};
  r.tolerances = tol_json(c, {"conformality"});
  r.pass = worst <= tol(c, "conformality");
  return r;
}

CheckResult check_legendre(const RunConfig& c, const TemperatureCurve& curve) {
  CheckResult r;
  r.name = "legendre";
  double identity = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    identity = std::max(identity, std::abs(curve.vd_of_nu_q[i] - (curve.T[i] + curve.q[i] * curve.alpha[i])));
  }
  r.measured["vd_identity"] = identity;
  r.tolerances = tol_json(c, {"vd_identity", "legendre_slope", "legendre_transform", "concavity"});
  try {
    const auto res = legendre_check(curve);
    r.measured["degenerate"] = false;
    r.measured["residuals"] = legendre_to_json(res);
    r.pass = identity <= tol(c, "vd_identity") && res.slope <= tol(c, "legendre_slope") &&
             res.transform <= tol(c, "legendre_transform") && res.max_concavity <= tol(c, "concavity");
  } catch (const DegenerateSpectrum&) {
    r.measured["degenerate"] = true;
    r.detail = "single-point spectrum; slope and transform residuals are undefined";
    r.pass = identity <= tol(c, "vd_identity");
  }
  return r;
}

CheckResult check_completeness(const RunConfig& c, const TemperatureCurve& curve) {
  CheckResult r;
  r.name = "completeness";
  const auto e = endpoints(c.family, c.depths.endpoint_period);
  const double lo = *std::min_element(curve.alpha.begin(), curve.alpha.end());
  const double hi = *std::max_element(curve.alpha.begin(), curve.alpha.end());
  const double slack = tol(c, "endpoint_agreement");
  const bool inside = lo >= e.cycle_alpha1 - 1e-12 && hi <= e.cycle_alpha2 + 1e-12;
  const auto infeasible = [&](double level) {
    try {
      conditional_variational_at(c.family, level, 1.0, 1, sub_seed(c, 2));
      return false;
    } catch (const InfeasibleConstraint&) {
      return true;
    }
  };
  const double below = e.cycle_alpha1 - 0.2;
  const double above = e.cycle_alpha2 + 0.2;
  const bool rejects_below = infeasible(below);
  const bool rejects_above = infeasible(above);
  r.measured = {{"endpoints", endpoints_to_json(e)},
                {"curve_alpha_range", {lo, hi}},
                {"curve_inside_endpoints", inside},
                {"infeasible_below", {{"alpha", below}, {"rejected", rejects_below}}},
                {"infeasible_above", {{"alpha", above}, {"rejected", rejects_above}}}};
  r.tolerances = tol_json(c, {"endpoint_agreement"});
  r.pass = e.spread <= slack && inside && rejects_below && rejects_above;
  return r;
}

CheckResult check_variational(const RunConfig& c, const TemperatureCurve&) {
  CheckResult r;
  r.name = "variational";
  Json per_q = Json::array();
  bool ok = true;
  std::uint64_t index = 10;
  for (double q : c.check_q) {
    const double t = solve_T(c.family, q);
    const auto vp = variational_principle_check(c.family.sft(), family_phi(c.family, q, t), 200, sub_seed(c, index++));
    const auto vt = variational_T_check(c.family, q, c.depths.endpoint_period);
    const auto cv = conditional_variational_check(c.family, q, 200, sub_seed(c, index++));
    const double eq = std::abs(vp.equilibrium_free_energy - vp.pressure);
    const double sampled = vp.max_sampled_free_energy - vp.pressure;
    per_q.push_back({{"q", q},
                     {"equilibrium_residual", eq},
                     {"max_sampled_excess", sampled},
                     {"periodic_gap", vt.gap},
                     {"T_equality_residual", vt.equality_residual},
                     {"conditional_max_violation", cv.max_violation},
                     {"conditional_equality_residual", cv.equality_residual},
                     {"conditional_constraint_error", cv.max_constraint_error},
                     {"conditional_seed", cv.seed}});
    ok = ok && eq <= tol(c, "variational_equality") && sampled <= tol(c, "variational_sampled") &&
         vt.gap >= -tol(c, "variational_gap") && vt.equality_residual <= tol(c, "variational_gap") &&
         cv.max_violation <= tol(c, "conditional_violation") &&
         cv.equality_residual <= tol(c, "conditional_equality");
  }
  r.measured = {{"per_q", per_q}, {"samples_per_q", 200}};
  r.tolerances = tol_json(c, {"variational_equality", "variational_sampled", "variational_gap",
                              "conditional_violation", "conditional_equality"});
  r.pass = ok;
  return r;
}

CheckResult check_concentration(const RunConfig& c, const TemperatureCurve&) {
  CheckResult r;
  r.name = "concentration";
  const auto rep = level_set_concentration(c.family, 0.0, c.sampling.n, c.sampling.N, c.sampling.epsilon,
                                           c.sampling.seed);
  const double clt = 3.0 * rep.stddev_ratio / std::sqrt(static_cast<double>(rep.samples));
  r.measured = {{"q", 0.0},
                {"fraction", rep.fraction},
                {"alpha", rep.alpha},
                {"mean_ratio", rep.mean_ratio},
                {"stddev_ratio", rep.stddev_ratio},
                {"n", rep.n},
                {"N", rep.samples},
                {"epsilon", rep.epsilon},
                {"seed", rep.seed}};
  r.tolerances = tol_json(c, {"concentration_fraction"});
  r.tolerances["mean_within_3_sigma"] = clt;
  r.pass = rep.fraction >= tol(c, "concentration_fraction") && std::abs(rep.mean_ratio - rep.alpha) <= clt;
  return r;
}

Json oscillation_json(const OscillationRecord& rec) {
  Json bounds = Json::array();
  for (const auto& [pos, ratio] : rec.boundaries) bounds.push_back({pos, ratio});
  return {{"ratio_a", rec.ratio_a},         {"ratio_b", rec.ratio_b},
          {"boundaries", bounds},           {"tail_min", rec.tail_min},
          {"tail_max", rec.tail_max},       {"spread", rec.spread},
          {"threshold", rec.threshold},     {"certified", rec.certified},
          {"admissible", rec.admissible},   {"horizon", rec.horizon},
          {"connector_symbols", rec.connector_symbols}};
}

std::pair<Word, Word> irregular_orbits(const RunConfig& c) {
  if (c.irregular.orbit_a && c.irregular.orbit_b) return {*c.irregular.orbit_a, *c.irregular.orbit_b};
  const auto e = endpoints(c.family, std::min<std::size_t>(c.depths.endpoint_period, 8), 0.0);
  return {c.irregular.orbit_a.value_or(e.periodic_argmax), c.irregular.orbit_b.value_or(e.periodic_argmin)};
}

CheckResult check_irregular(const RunConfig& c, const TemperatureCurve&) {
  CheckResult r;
  r.name = "irregular";
  const auto [a, b] = irregular_orbits(c);
  const auto schedule = BlockSchedule::geometric(c.irregular.growth_factor, c.irregular.horizon);
  r.tolerances = tol_json(c, {"irregular_fraction"});
  r.tolerances["growth_factor"] = c.irregular.growth_factor;
  r.measured = {{"orbit_a", word_to_string(a)}, {"orbit_b", word_to_string(b)}};
  try {
    const auto rec = irregular_point(c.family, a, b, schedule, c.irregular.horizon);
    const double needed = tol(c, "irregular_fraction") * std::abs(rec.ratio_a - rec.ratio_b);
    r.measured["oscillation"] = oscillation_json(rec);
    r.measured["required_spread"] = needed;
    r.pass = rec.admissible && rec.spread >= needed;
    if (!r.pass) r.detail = "tail spread below the required fraction of |ratio_a - ratio_b|";
  } catch (const EqualRatios&) {
    // Every orbit has the same ratio exactly when the level set is a single point.
    const bool degenerate = is_degenerate_range(c);
    r.measured["equal_ratios"] = true;
    r.measured["degenerate"] = degenerate;
    r.pass = degenerate;
    r.detail = degenerate ? "all Birkhoff ratios coincide; the irregular set is empty"
                          : "chosen orbits have equal ratios";
  }
  return r;
}

CheckResult check_degeneracy(const RunConfig& c, const TemperatureCurve& curve) {
  CheckResult r;
  r.name = "degeneracy";
  const auto ev = degeneracy_test(curve);
  const bool flat = is_degenerate_range(c);
  r.measured = {{"is_nu0", ev.is_nu0},
                {"max_T_second_var", ev.max_T_second_var},
                {"alpha_variation", ev.alpha_variation},
                {"cycle_ratio_range_is_point", flat},
                {"verdict", ev.is_nu0 ? "nu = nu0 (straight line)" : "non-degenerate (strictly convex T)"}};
  r.tolerances = {{"threshold", ev.threshold}};
  r.pass = ev.is_nu0 == flat;
  if (!r.pass) r.detail = "curve evidence disagrees with the cycle ratio range";
  if (c.expect_degenerate) {
    r.measured["expected_is_nu0"] = *c.expect_degenerate;
    if (*c.expect_degenerate != ev.is_nu0) {
      r.pass = false;
      r.detail = "degeneracy verdict differs from the configured expectation";
    }
  }
  return r;
}

double golden_quantity(const RunConfig& c, const std::string& name, const Json& entry, const std::string& where) {
  const double q = number(entry, "q", where, 0.0);
  if (name == "pressure") return pressure(c.family.sft(), family_phi(c.family, q, number(entry, "t", where, 0.0)));
  const double t = solve_T(c.family, q);
  if (name == "T") return t;
  if (name == "alpha") return alpha(c.family, q);
  if (name == "S") return t + q * alpha(c.family, q);
  const auto nu = nu_q(c.family, q);
  if (name == "entropy") return entropy(nu);
  if (name == "lyapunov") return integrate(nu, c.family.jac());
  throw SchemaError(where + ".quantity", "unknown quantity '" + name + "'");
}

CheckResult check_golden(const RunConfig& c, const TemperatureCurve&) {
  CheckResult r;
  r.name = "golden";
  if (!c.golden) {
    r.detail = "no golden file configured";
    return r;
  }
  const Json& g = *c.golden;
  const double t = number(g, "tolerance", "golden", tol(c, "golden"));
  Json rows = Json::array();
  bool ok = true;
  std::string first_failure;
  for (std::size_t i = 0; i < g["values"].size(); ++i) {
    const Json& entry = g["values"][i];
    const std::string where = "golden.values[" + std::to_string(i) + "]";
    const std::string name = entry["quantity"].get<std::string>();
    const double expected = entry["value"].get<double>();
    const double got = golden_quantity(c, name, entry, where);
    const double delta = got - expected;
    const bool pass = std::abs(delta) <= t;
    std::string label = name + "(q=" + format_double(number(entry, "q", where, 0.0));
    if (name == "pressure") label += ", t=" + format_double(number(entry, "t", where, 0.0));
    label += ")";
    rows.push_back({{"name", label}, {"expected", expected}, {"measured", got}, {"delta", delta}, {"pass", pass}});
    if (!pass && first_failure.empty()) first_failure = label + " delta " + format_double(delta);
    ok = ok && pass;
  }
  r.measured = {{"values", rows}};
  r.tolerances = {{"golden", t}};
  r.pass = ok;
  if (!ok) r.detail = "mismatch: " + first_failure;
  return r;
}

using CheckFn = std::function<CheckResult(const RunConfig&, const TemperatureCurve&)>;

const std::map<std::string, CheckFn>& check_table() {
  static const std::map<std::string, CheckFn> table{
      {"temperature", check_temperature}, {"gibbs", check_gibbs},
      {"conformality", check_conformality}, {"legendre", check_legendre},
      {"completeness", check_completeness}, {"variational", check_variational},
      {"concentration", check_concentration}, {"irregular", check_irregular},
      {"degeneracy", check_degeneracy},   {"golden", check_golden}};
  return table;
}

Json parse_golden(const Json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  reject_unknown(j, {"schema_version", "tolerance", "values", "description"}, where);
  if (!j.contains("values") || !j["values"].is_array()) throw SchemaError(where + ".values", "expected an array");
  for (std::size_t i = 0; i < j["values"].size(); ++i) {
    const Json& e = j["values"][i];
    const std::string w = where + ".values[" + std::to_string(i) + "]";
    if (!e.is_object()) throw SchemaError(w, "expected an object");
    reject_unknown(e, {"quantity", "q", "t", "value"}, w);
    if (!e.contains("quantity") || !e["quantity"].is_string()) throw SchemaError(w + ".quantity", "expected a string");
    if (!e.contains("value") || !e["value"].is_number()) throw SchemaError(w + ".value", "expected a number");
    static const std::set<std::string> names{"pressure", "T", "alpha", "S", "entropy", "lyapunov"};
    if (!names.count(e["quantity"].get<std::string>())) throw SchemaError(w + ".quantity", "unknown quantity");
  }
  return j;
}

}  // namespace

Tolerances default_tolerances() {
  return {{"t_at_one", 1e-10},
          {"pressure_zero", 1e-11},
          {"convexity", 1e-9},
          {"t_prime", 1e-6},
          {"partials", 1e-8},
          {"t_second", 1e-5},
          {"vd_identity", 1e-8},
          {"conformality", 1e-12},
          {"legendre_slope", 5e-3},
          {"legendre_transform", 1e-4},
          {"concavity", 1e-9},
          {"endpoint_agreement", 2e-3},
          {"variational_equality", 1e-10},
          {"variational_sampled", 1e-10},
          {"variational_gap", 1e-9},
          {"conditional_violation", 1e-8},
          {"conditional_equality", 1e-9},
          {"concentration_fraction", 0.95},
          {"irregular_fraction", 0.8},
          {"golden", 1e-9}};
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"temperature", "gibbs",         "conformality", "legendre",
                                              "completeness", "variational",  "concentration", "irregular",
                                              "degeneracy",  "golden"};
  return names;
}

RunConfig parse_config(const Json& config, const fs::path& base_dir) {
  if (!config.is_object()) throw SchemaError("(root)", "expected an object");
  reject_unknown(config,
                 {"schema_version", "name", "description", "system", "q_grid", "depths", "sampling", "irregular",
                  "pressure_grid", "orbits", "check_q", "outputs", "checks", "golden", "expect", "tolerances"},
                 "");
  Json resolved = config;
  if (!config.contains("schema_version") || !config["schema_version"].is_number_integer()) {
    throw SchemaError("schema_version", "missing or not an integer");
  }
  if (config["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version " + config["schema_version"].dump());
  }
  std::string name = "unnamed";
  if (config.contains("name")) {
    if (!config["name"].is_string()) throw SchemaError("name", "expected a string");
    name = config["name"].get<std::string>();
  }

  // System.
  const Json& system = require_object(config, "system", "system");
  reject_unknown(system, {"sft", "g", "jac"}, "system");
  for (const char* key : {"sft", "g", "jac"}) {
    if (!system.contains(key)) throw SchemaError(std::string("system.") + key, "missing required field");
    resolved["system"][key] = resolve_reference(system[key], base_dir, std::string("system.") + key);
  }
  const Json& sys = resolved["system"];
  Sft sft = [&] {
    try {
      return sft_from_json(sys["sft"]);
    } catch (const SchemaError& e) {
      throw SchemaError("system." + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    } catch (const Error& e) {
      throw SchemaError("system.sft", e.what());
    }
  }();
  const Potential g = parse_potential(sft, sys["g"], "system.g");
  const Potential jac_raw = parse_potential(sft, sys["jac"], "system.jac");
  if (jac_raw.min_value() <= 0.0) throw SchemaError("system.jac", "values must be strictly positive");
  if (std::max(g.depth(), jac_raw.depth()) > 8) throw SchemaError("system", "potential depth exceeds 8");
  PotentialFamily family = PotentialFamily::make(g, JacobianPotential(jac_raw));

  QGrid grid;
  if (config.contains("q_grid")) {
    const Json& q = require_object(config, "q_grid", "q_grid");
    reject_unknown(q, {"min", "max", "step"}, "q_grid");
    grid.min = number(q, "min", "q_grid", grid.min);
    grid.max = number(q, "max", "q_grid", grid.max);
    grid.step = number(q, "step", "q_grid", grid.step);
  }
  if (!(grid.min < 1.0 && 1.0 < grid.max)) {
    throw SchemaError("q_grid", "min < 1 < max is required so that T(1) = 0 is exercised");
  }
  if (!(grid.step > 0.0) || (grid.max - grid.min) / grid.step > 100000.0) {
    throw SchemaError("q_grid.step", "must be positive with at most 100000 grid points");
  }
  if (grid.min < -200.0 || grid.max > 200.0) throw SchemaError("q_grid", "|q| is capped at 200");

  Depths depths;
  if (config.contains("depths")) {
    const Json& d = require_object(config, "depths", "depths");
    reject_unknown(d, {"gibbs_depth", "endpoint_period", "conformality_depth"}, "depths");
    depths.gibbs_depth = count(d, "gibbs_depth", "depths", depths.gibbs_depth, 1, 24);
    depths.endpoint_period = count(d, "endpoint_period", "depths", depths.endpoint_period, 1, 24);
    depths.conformality_depth = count(d, "conformality_depth", "depths", depths.conformality_depth, 1, 24);
  }
  const double p = static_cast<double>(sft.alphabet_size());
  const auto too_many = [&](std::size_t depth) { return std::pow(p, static_cast<double>(depth)) > double(kMaxEnumeration); };
  if (too_many(depths.gibbs_depth)) throw SchemaError("depths.gibbs_depth", "too many cylinders to enumerate");
  if (too_many(depths.conformality_depth)) {
    throw SchemaError("depths.conformality_depth", "too many cylinders to enumerate");
  }
  if (too_many(depths.endpoint_period)) throw SchemaError("depths.endpoint_period", "too many orbits to enumerate");

  Sampling sampling;
  if (config.contains("sampling")) {
    const Json& s = require_object(config, "sampling", "sampling");
    reject_unknown(s, {"n", "N", "epsilon", "seed"}, "sampling");
    sampling.n = count(s, "n", "sampling", sampling.n, 1, 100000000);
    sampling.N = count(s, "N", "sampling", sampling.N, 1, 10000000);
    sampling.epsilon = number(s, "epsilon", "sampling", sampling.epsilon);
    if (!(sampling.epsilon > 0.0)) throw SchemaError("sampling.epsilon", "must be positive");
    if (s.contains("seed")) {
      const Json& v = s["seed"];
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) throw SchemaError("sampling.seed", "expected a non-negative integer");
      sampling.seed = s["seed"].get<std::uint64_t>();
    }
  }

  IrregularSpec irregular;
  if (config.contains("irregular")) {
    const Json& ir = require_object(config, "irregular", "irregular");
    reject_unknown(ir, {"orbit_a", "orbit_b", "growth_factor", "horizon"}, "irregular");
    if (ir.contains("orbit_a")) irregular.orbit_a = orbit_word(ir, "orbit_a", "irregular", sft);
    if (ir.contains("orbit_b")) irregular.orbit_b = orbit_word(ir, "orbit_b", "irregular", sft);
    irregular.growth_factor = number(ir, "growth_factor", "irregular", irregular.growth_factor);
    if (irregular.growth_factor < 4.0) throw SchemaError("irregular.growth_factor", "must be at least 4");
    irregular.horizon = count(ir, "horizon", "irregular", irregular.horizon, 1000, 100000000);
  }

  PressureGrid pgrid;
  if (config.contains("pressure_grid")) {
    const Json& pg = require_object(config, "pressure_grid", "pressure_grid");
    reject_unknown(pg, {"t_min", "t_max", "t_step", "q_step"}, "pressure_grid");
    pgrid.t_min = number(pg, "t_min", "pressure_grid", pgrid.t_min);
    pgrid.t_max = number(pg, "t_max", "pressure_grid", pgrid.t_max);
    pgrid.t_step = number(pg, "t_step", "pressure_grid", pgrid.t_step);
    pgrid.q_step = number(pg, "q_step", "pressure_grid", pgrid.q_step);
    if (!(pgrid.t_min < pgrid.t_max) || !(pgrid.t_step > 0.0) || !(pgrid.q_step > 0.0)) {
      throw SchemaError("pressure_grid", "need t_min < t_max and positive steps");
    }
  }

  OrbitDump orbits;
  if (config.contains("orbits")) {
    const Json& o = require_object(config, "orbits", "orbits");
    reject_unknown(o, {"q", "count", "length"}, "orbits");
    orbits.q = number(o, "q", "orbits", orbits.q);
    orbits.count = count(o, "count", "orbits", orbits.count, 1, 100000);
    orbits.length = count(o, "length", "orbits", orbits.length, 1, 10000000);
  }

  std::vector<double> check_q{-2.0, 0.0, 1.0, 2.0};
  if (config.contains("check_q")) {
    const Json& cq = config["check_q"];
    if (!cq.is_array() || cq.empty()) throw SchemaError("check_q", "expected a non-empty array of numbers");
    check_q.clear();
    for (const Json& v : cq) {
      if (!v.is_number()) throw SchemaError("check_q", "entries must be numbers");
      check_q.push_back(v.get<double>());
    }
  }

  fs::path outputs = fs::path("out") / name;
  if (config.contains("outputs")) {
    if (!config["outputs"].is_string()) throw SchemaError("outputs", "expected a directory path");
    outputs = config["outputs"].get<std::string>();
  }

  std::vector<std::string> checks;
  if (config.contains("checks")) {
    if (!config["checks"].is_array()) throw SchemaError("checks", "expected an array of check names");
    for (const Json& v : config["checks"]) {
      if (!v.is_string() || !check_table().count(v.get<std::string>())) {
        throw SchemaError("checks", "unknown check " + v.dump());
      }
      checks.push_back(v.get<std::string>());
    }
  }

  std::optional<Json> golden;
  if (config.contains("golden")) {
    resolved["golden"] = resolve_reference(config["golden"], base_dir, "golden");
    golden = parse_golden(resolved["golden"], "golden");
  }
  if (checks.empty()) {
    for (const auto& n : known_checks()) {
      if (n != "golden" || golden) checks.push_back(n);
    }
  }

  std::optional<bool> expect_degenerate;
  if (config.contains("expect")) {
    const Json& ex = require_object(config, "expect", "expect");
    reject_unknown(ex, {"degenerate"}, "expect");
    if (ex.contains("degenerate")) {
      if (!ex["degenerate"].is_boolean()) throw SchemaError("expect.degenerate", "expected a boolean");
      expect_degenerate = ex["degenerate"].get<bool>();
    }
  }

  Tolerances tolerances = default_tolerances();
  if (config.contains("tolerances")) {
    const Json& t = require_object(config, "tolerances", "tolerances");
    for (const auto& [key, v] : t.items()) {
      if (!tolerances.count(key)) throw SchemaError("tolerances." + key, "unknown tolerance");
      if (!v.is_number() || !(v.get<double>() >= 0.0)) {
        throw SchemaError("tolerances." + key, "expected a non-negative number");
      }
      tolerances[key] = v.get<double>();
    }
  }

  return RunConfig{std::move(name), std::move(family), grid,          depths,  sampling,
                   irregular,       pgrid,             orbits,        check_q, std::move(outputs),
                   std::move(checks), std::move(golden), expect_degenerate, std::move(tolerances),
                   std::move(resolved)};
}

RunConfig load_config(const fs::path& path) {
  const Json j = parse_text(read_text(path), path.string());
  return parse_config(j, path.parent_path());
}

std::string config_hash(const RunConfig& config) {
  Json copy = config.resolved;
  copy.erase("outputs");
  const std::string text = copy.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

CheckResult run_check(const RunConfig& config, const std::string& name, const TemperatureCurve& curve) {
  const auto it = check_table().find(name);
  if (it == check_table().end()) throw InvalidArgument("unknown check '" + name + "'");
  return it->second(config, curve);
}

Json check_to_json(const CheckResult& result) {
  Json j{{"name", result.name},
         {"status", result.pass ? "PASS" : "FAIL"},
         {"measured", result.measured},
         {"tolerances", result.tolerances}};
  if (!result.detail.empty()) j["detail"] = result.detail;
  return j;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

struct Session {
  RunConfig config;
  std::string command;
  bool quiet = false;
  std::ostream& out;

  Json metadata() const {
    return {{"tool", "mfspec"},
            {"version", MFSPEC_VERSION},
            {"command", command},
            {"config_name", config.name},
            {"config_hash", config_hash(config)},
            {"schema_version", kSchemaVersion},
            {"seed", config.sampling.seed},
            {"rng", Rng::kAlgorithm},
            {"fd_step", kFiniteDifferenceStep},
            {"tolerances", config.tolerances}};
  }

  std::string csv_header() const {
    std::ostringstream h;
    h << "# mfspec " << MFSPEC_VERSION << ' ' << command << '\n'
      << "# config_name: " << config.name << '\n'
      << "# config_hash: " << config_hash(config) << '\n'
      << "# seed: " << config.sampling.seed << '\n'
      << "# rng: " << Rng::kAlgorithm << '\n'
      << "# fd_step: " << format_double(kFiniteDifferenceStep) << '\n'
      << "# tolerances: " << Json(config.tolerances).dump() << '\n';
    return h.str();
  }

  void write_json(const std::string& file, Json body) const {
    body["metadata"] = metadata();
    write_atomic(config.outputs / file, body.dump(2) + "\n");
  }
  void write_text(const std::string& file, const std::string& body) const {
    write_atomic(config.outputs / file, csv_header() + body);
  }
  void note(const std::string& line) const {
    if (!quiet) out << line << '\n';
  }

  TemperatureCurve curve() const {
    return temperature_curve(config.family, make_grid(config.q_grid.min, config.q_grid.max, config.q_grid.step));
  }
};

int cmd_pressure(const Session& s) {
  const auto& c = s.config;
  const auto qs = make_grid(c.q_grid.min, c.q_grid.max, c.pressure_grid.q_step);
  const auto ts = make_grid(c.pressure_grid.t_min, c.pressure_grid.t_max, c.pressure_grid.t_step);
  std::ostringstream csv;
  csv << "q,t,P\n";
  double max_increment = -std::numeric_limits<double>::infinity();
  for (double q : qs) {
    double previous = std::numeric_limits<double>::infinity();
    for (double t : ts) {
      const double p = pressure(c.family.sft(), family_phi(c.family, q, t));
      csv << format_double(q) << ',' << format_double(t) << ',' << format_double(p) << '\n';
      if (std::isfinite(previous)) max_increment = std::max(max_increment, p - previous);
      previous = p;
    }
  }
  const bool monotone = ts.size() < 2 || max_increment < 0.0;
  s.write_text("pressure.csv", csv.str());
  s.write_json("pressure.json", {{"q", qs},
                                 {"t", ts},
                                 {"normalization_shift", c.family.normalization_shift()},
                                 {"audit", {{"strictly_decreasing_in_t", monotone},
                                            {"max_increment_in_t", ts.size() < 2 ? 0.0 : max_increment}}}});
  s.note(std::string(monotone ? "PASS" : "FAIL") + " pressure monotonicity in t");
  return monotone ? kOk : kCheckFailed;
}

int cmd_temperature(const Session& s) {
  const auto curve = s.curve();
  const double t1 = solve_T(s.config.family, 1.0);
  const bool ok = std::abs(t1) <= tol(s.config, "t_at_one");
  Json body = curve_to_json(curve);
  body["audit"] = {{"T_at_1", t1}, {"pass", ok}};
  s.write_text("temperature.csv", curve_to_csv(curve));
  s.write_json("temperature.json", body);
  s.note(std::string(ok ? "PASS" : "FAIL") + " T(1) = " + format_double(t1));
  s.note("convention_used: " + std::string(to_string(curve.convention_used)));
  return ok ? kOk : kCheckFailed;
}

int cmd_spectrum(const Session& s) {
  const auto& c = s.config;
  const auto curve = s.curve();
  const auto points = spectrum_points(curve);
  Json pts = Json::array();
  for (const auto& p : points) pts.push_back({{"q", p.q}, {"alpha", p.alpha}, {"S", p.S}, {"S_vd", p.S_vd}});
  Json body{{"points", pts}};
  bool ok = true;
  try {
    const auto res = legendre_check(curve);
    body["degenerate"] = false;
    body["legendre"] = legendre_to_json(res);
    ok = res.slope <= tol(c, "legendre_slope") && res.transform <= tol(c, "legendre_transform") &&
         res.max_concavity <= tol(c, "concavity");
  } catch (const DegenerateSpectrum&) {
    body["degenerate"] = true;
    body["legendre"] = nullptr;
    s.note("single-point spectrum: alpha is constant, S = " + format_double(points.front().S));
  }
  const auto e = endpoints(c.family, c.depths.endpoint_period);
  body["endpoints"] = endpoints_to_json(e);
  ok = ok && e.spread <= tol(c, "endpoint_agreement");
  Json gaps = Json::array();
  for (double q : c.check_q) {
    const auto vt = variational_T_check(c.family, q, c.depths.endpoint_period);
    gaps.push_back({{"q", q}, {"gap", vt.gap}, {"equality_residual", vt.equality_residual},
                    {"orbits_scanned", vt.orbits_scanned}});
    ok = ok && vt.gap >= -tol(c, "variational_gap") && vt.equality_residual <= tol(c, "variational_gap");
  }
  body["variational_gaps"] = gaps;
  s.write_text("spectrum.csv", spectrum_csv(points));
  s.write_json("spectrum.json", body);
  s.note(std::string(ok ? "PASS" : "FAIL") + " spectrum report");
  return ok ? kOk : kCheckFailed;
}

int cmd_verify(const Session& s) {
  const auto curve = s.curve();
  Json checks = Json::array();
  bool all = true;
  for (const auto& name : s.config.checks) {
    const auto result = run_check(s.config, name, curve);
    checks.push_back(check_to_json(result));
    all = all && result.pass;
    s.note(std::string(result.pass ? "PASS " : "FAIL ") + name +
           (result.detail.empty() ? "" : " (" + result.detail + ")"));
  }
  s.write_json("verify.json", {{"checks", checks}, {"overall", all ? "PASS" : "FAIL"}});
  return all ? kOk : kCheckFailed;
}

int cmd_orbits(const Session& s) {
  const auto& c = s.config;
  const auto nu = nu_q(c.family, c.orbits.q);
  std::ostringstream lines;
  Json samples = Json::array();
  bool admissible = true;
  for (std::size_t i = 0; i < c.orbits.count; ++i) {
    const auto sample = sample_orbit(nu, c.orbits.length, sub_seed(c, 1000 + i), "nu_q(q=" + format_double(c.orbits.q) + ")");
    admissible = admissible && c.family.sft().admissible(sample.symbols);
    lines << word_to_string(sample.symbols) << '\n';
    samples.push_back({{"index", i}, {"seed", sample.seed}, {"source", sample.source}, {"length", sample.symbols.size()}});
  }
  const auto rep = level_set_concentration(c.family, c.orbits.q, c.sampling.n, c.sampling.N, c.sampling.epsilon,
                                           c.sampling.seed);
  Json body{{"samples", samples},
            {"all_admissible", admissible},
            {"concentration", {{"q", c.orbits.q},
                               {"fraction", rep.fraction},
                               {"alpha", rep.alpha},
                               {"mean_ratio", rep.mean_ratio},
                               {"stddev_ratio", rep.stddev_ratio},
                               {"n", rep.n},
                               {"N", rep.samples},
                               {"epsilon", rep.epsilon},
                               {"seed", rep.seed}}}};
  const auto [a, b] = irregular_orbits(c);
  try {
    const auto rec = irregular_point(c.family, a, b, BlockSchedule::geometric(c.irregular.growth_factor, c.irregular.horizon),
                                     c.irregular.horizon);
    body["oscillation"] = oscillation_json(rec);
  } catch (const EqualRatios&) {
    body["oscillation"] = {{"equal_ratios", true}};
  }
  s.write_text("orbits.txt", lines.str());
  s.write_json("orbits.json", body);
  s.note(std::string(admissible ? "PASS" : "FAIL") + " " + std::to_string(c.orbits.count) + " orbits sampled");
  return admissible ? kOk : kCheckFailed;
}

std::vector<std::string> split_checks(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multifractal analysis of equilibrium states on subshifts of finite type", "mfspec"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string("mfspec ") + MFSPEC_VERSION);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string checks_text;
  bool quiet = false;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "Sampling seed (overrides the config)");
  auto* checks_opt = app.add_option("--checks", checks_text, "Comma-separated checks for verify");
  app.add_flag("--quiet", quiet, "Suppress the summary on stdout");

  const std::map<std::string, std::function<int(const Session&)>> commands{
      {"pressure", cmd_pressure}, {"temperature", cmd_temperature}, {"spectrum", cmd_spectrum},
      {"verify", cmd_verify},     {"orbits", cmd_orbits}};
  const std::map<std::string, std::string> help{
      {"pressure", "P(q, t) table with a monotonicity audit"},
      {"temperature", "Temperature curve T(q), alpha(q) and derivatives"},
      {"spectrum", "Spectrum points, Legendre residuals, endpoints"},
      {"verify", "Run the named verification checks"},
      {"orbits", "Sample orbits, concentration and oscillation records"}};
  for (const auto& [name, _] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

  std::ostringstream cli_out, cli_err;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, cli_out, cli_err);
    out << cli_out.str();
    err << cli_err.str();
    return code == 0 ? kOk : kUsageError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (config_path.empty()) {
    err << "error: --config is required\n";
    return kUsageError;
  }

  try {
    RunConfig config = load_config(config_path);
    if (seed_opt->count() > 0) {
      config.sampling.seed = seed;
      config.resolved["sampling"]["seed"] = seed;
    }
    if (checks_opt->count() > 0) {
      config.checks = split_checks(checks_text);
      for (const auto& name : config.checks) {
        if (!check_table().count(name)) throw SchemaError("--checks", "unknown check '" + name + "'");
      }
      config.resolved["checks"] = config.checks;
    }
    if (!out_dir.empty()) config.outputs = out_dir;
    const Session session{std::move(config), command, quiet, out};
    return commands.at(command)(session);
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace mfspec::app
