#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "mfspec/errors.hpp"
#include "mfspec/json_io.hpp"
#include "mfspec/spectrum.hpp"

using namespace mfspec;
using namespace mfspec::testing;

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-8.0) == "-8");
}

TEST_CASE("Sft JSON round trip and validation") {
  const Sft golden = golden_mean_shift();
  const Sft back = sft_from_json(sft_to_json(golden));
  CHECK(back.transitions() == golden.transitions());
  CHECK_THROWS_AS(sft_from_json(Json{{"alphabet_size", 2}, {"transitions", {{1, 0}, {0, 1}}}}), ReducibleMatrix);
  try {
    sft_from_json(Json{{"alphabet_size", 3}, {"transitions", {{1, 1}, {1, 1}}}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.where() == "sft.transitions");
  }
  try {
    sft_from_json(Json{{"alphabet_size", 2}, {"transitions", {{1, 0.5}, {1, 1}}}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.where() == "sft.transitions[0]");
  }
}

TEST_CASE("Potential JSON round trip and diagnostics") {
  const Sft golden = golden_mean_shift();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto phi = Potential::from_function(golden, 3, [&](const Word&) { return normal(rng); });
  const auto back = potential_from_json(golden, potential_to_json(phi));
  CHECK(back.depth() == 3);
  for (std::size_t i = 0; i < phi.values().size(); ++i) CHECK(back.value(i) == phi.value(i));

  try {
    potential_from_json(golden, Json{{"depth", 2}, {"values", {{"00", 1.0}, {"01", 1.0}, {"10", 1.0}, {"11", 1.0}}}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.where() == "potential.values");
  }
  try {
    potential_from_json(golden, Json{{"depth", 1}, {"values", {{"0", "x"}, {"1", 1.0}}}});
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.where() == "potential.values.0");
  }
  CHECK_THROWS_AS(potential_from_json(golden, Json{{"depth", 0}, {"values", Json::object()}}), SchemaError);
}

TEST_CASE("curve and spectrum CSV layouts are frozen") {
  const auto curve = temperature_curve(system_b(), make_grid(-1.0, 2.0, 0.5));
  const std::string csv = curve_to_csv(curve);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "q,T,alpha,T_prime_fd,T_second_fd,T_second_var,vd_nu_q");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
    ++rows;
  }
  CHECK(rows == curve.size());

  const std::string s = spectrum_csv(spectrum_points(curve));
  std::istringstream sin(s);
  std::getline(sin, line);
  CHECK(line == "alpha,S");
  double previous = -1.0;
  while (std::getline(sin, line)) {
    const double a = std::stod(line.substr(0, line.find(',')));
    CHECK(a > previous);
    previous = a;
  }

  const Json j = curve_to_json(curve);
  CHECK(j["convention_used"] == "one_sided");
  CHECK(j["q"].size() == curve.size());
  CHECK(j.dump() == curve_to_json(curve).dump());
}

TEST_CASE("report objects serialize their fields") {
  const auto fam = system_b();
  const auto e = endpoints(fam, 6);
  const Json ej = endpoints_to_json(e);
  CHECK(ej["periodic"]["alpha1"] == 0.5);
  CHECK(ej["periodic"]["argmax_orbit"] == "0");
  CHECK(ej.contains("spread"));

  const auto phi = family_phi(fam, 0.0, solve_T(fam, 0.0));
  const Json gj = gibbs_to_json(gibbs_certificate(fam.sft(), phi, 6));
  CHECK(gj["certified"] == true);
  CHECK(gj["cylinders_checked"] == 126);

  const Json pj = perron_to_json(perron(weighted_matrix(fam.sft(), phi)));
  CHECK(pj["states"] == Json::array({"0", "1"}));
  CHECK(pj["lambda"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  const Json mj = markov_to_json(equilibrium_state(fam.sft(), phi));
  CHECK(mj["stationary"].size() == 2);
}
