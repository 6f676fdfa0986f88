#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mfspec/errors.hpp"
#include "mfspec/temperature.hpp"
#include "mfspec/transfer.hpp"

using namespace mfspec;
using namespace mfspec::testing;

namespace {

Potential random_potential(const Sft& sft, std::size_t depth, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  return Potential::from_function(sft, depth, [&](const Word&) { return normal(rng); });
}

// Oracle: truncated correlation series sum_k pi (h1bar * P^k h2bar) on the state chain.
// Requires depth(h) <= state length so that h is a function of the state.
double series_variance(const MarkovMeasure& mu, const Potential& h1, const Potential& h2, bool symmetric) {
  const auto& states = mu.states();
  const std::size_t n = states.size();
  Eigen::VectorXd a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[static_cast<long>(i)] = h1.evaluate(states[i]);
    b[static_cast<long>(i)] = h2.evaluate(states[i]);
  }
  const Eigen::RowVectorXd& pi = mu.stationary();
  a.array() -= pi.dot(a);
  b.array() -= pi.dot(b);
  const auto one_sided = [&](Eigen::VectorXd x, const Eigen::VectorXd& y) {
    double sum = 0.0;
    Eigen::VectorXd pk = y;
    for (int k = 0; k < 400; ++k) {
      sum += pi.dot(x.cwiseProduct(pk));
      pk = mu.stochastic() * pk;
    }
    return sum;
  };
  if (!symmetric) return one_sided(a, b);
  return one_sided(a, b) + one_sided(b, a) - pi.dot(a.cwiseProduct(b));
}

}  // namespace

TEST_CASE("weighted_matrix examples") {
  const Sft full = full_shift(2);
  CHECK(weighted_matrix(full, Potential::constant(full, 1, 0.0)).matrix.isApprox(Eigen::Matrix2d::Ones()));
  const auto half = weighted_matrix(full, Potential::constant(full, 1, -kLog2));
  CHECK((half.matrix.array() - 0.5).abs().maxCoeff() <= 1e-15);
  Eigen::Matrix2d golden;
  golden << 1, 1, 1, 0;
  CHECK(weighted_matrix(golden_mean_shift(), Potential::constant(golden_mean_shift(), 1, 0.0)).matrix == golden);
}

TEST_CASE("perron examples") {
  const auto pd = perron(Eigen::MatrixXd(Eigen::Matrix2d::Ones()));
  CHECK(pd.lambda == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(pd.right[0] == doctest::Approx(1.0));
  CHECK(pd.right[1] == doctest::Approx(1.0));
  CHECK(pd.left[0] == doctest::Approx(0.5));
  CHECK(pd.left[1] == doctest::Approx(0.5));

  Eigen::MatrixXd g(2, 2);
  g << 1, 1, 1, 0;
  CHECK(std::abs(perron(g).lambda - kGolden) <= 1e-13);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd m(4, 4);
    for (long i = 0; i < 16; ++i) m(i / 4, i % 4) = u(rng);
    Eigen::VectorXd d(4);
    for (long i = 0; i < 4; ++i) d[i] = u(rng);
    const Eigen::MatrixXd conj = d.asDiagonal() * m * d.cwiseInverse().asDiagonal();
    const double l1 = perron(m).lambda;
    CHECK(std::abs(perron(conj).lambda - l1) <= 1e-12 * l1);
    const double eig = m.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(std::abs(l1 - eig) <= 1e-12 * eig);
  }
}

TEST_CASE("perron handles periodic matrices") {
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 2, 3, 0;
  const auto pd = perron(swap);
  CHECK(pd.lambda == doctest::Approx(std::sqrt(6.0)).epsilon(1e-13));
  CHECK((swap * pd.right - pd.lambda * pd.right).norm() <= 1e-12);
  CHECK((pd.left.transpose() * swap - pd.lambda * pd.left.transpose()).norm() <= 1e-12);
  CHECK(pd.left.dot(pd.right) == doctest::Approx(1.0));
}

TEST_CASE("perron converges on nearly periodic matrices") {
  for (double a : {1e-4, 1e-6, 1e-9}) {
    Eigen::MatrixXd m(2, 2);
    m << a, 1.0, 1.0, 0.0;
    const double exact = (a + std::sqrt(a * a + 4.0)) / 2.0;
    const auto pd = perron(m);
    CHECK(std::abs(pd.lambda - exact) <= 1e-13 * exact);
    CHECK(pd.residual <= 1e-12);
  }
}

TEST_CASE("pressure examples and the rank-one closed form") {
  CHECK(pressure(full_shift(2), Potential::constant(full_shift(2), 1, 0.0)) ==
        doctest::Approx(0.6931471806).epsilon(1e-10));
  CHECK(pressure(golden_mean_shift(), Potential::constant(golden_mean_shift(), 1, 0.0)) ==
        doctest::Approx(0.4812118251).epsilon(1e-10));

  std::mt19937_64 rng(8);
  for (std::size_t p = 2; p <= 5; ++p) {
    const Sft full = full_shift(p);
    std::vector<double> v(p);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (double& x : v) x = normal(rng);
    double sum = 0.0;
    for (double x : v) sum += std::exp(x);
    CHECK(std::abs(pressure(full, Potential::per_symbol(full, v)) - std::log(sum)) <= 1e-12);
  }
  // Large values do not overflow: P(phi + c) = P(phi) + c.
  const auto phi = Potential::per_symbol(full_shift(2), {800.0, 801.0});
  CHECK(pressure(full_shift(2), phi) == doctest::Approx(800.0 + std::log(1.0 + std::exp(1.0))).epsilon(1e-14));
}

TEST_CASE("equilibrium states of depth-1 potentials are Bernoulli") {
  const Sft full = full_shift(2);
  const auto half = equilibrium_state(full, Potential::constant(full, 1, -kLog2));
  CHECK(half.stationary()[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(cylinder_measure(half, Word(10, 1)) == doctest::Approx(std::pow(2.0, -10)).epsilon(1e-13));
  CHECK(entropy(half) == doctest::Approx(kLog2).epsilon(1e-14));

  const double t0 = std::log2(kGolden);
  const auto mu = equilibrium_state(full, Potential::per_symbol(full, {-t0 * kLog2, -2 * t0 * kLog2}));
  const double p0 = (std::sqrt(5.0) - 1.0) / 2.0;
  CHECK(std::abs(mu.stationary()[0] - p0) <= 1e-12);
  CHECK(std::abs(mu.stochastic()(1, 0) - p0) <= 1e-12);
  // Oracle values: -sum p log p and log2 (p0 + 2 p1) with p0 = 1/golden ratio.
  CHECK(std::abs(entropy(mu) - 0.6650183864440036) <= 1e-12);
  const auto jac = Potential::per_symbol(full, {kLog2, 2 * kLog2});
  CHECK(std::abs(integrate(mu, jac) - 0.957905844327684) <= 1e-12);
}

TEST_CASE("variational identity holds for random potentials") {
  std::mt19937_64 rng(21);
  const std::vector<Sft> shifts{full_shift(2), golden_mean_shift(), full_shift(3),
                                validate({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}})};
  for (int trial = 0; trial < 40; ++trial) {
    const Sft& sft = shifts[static_cast<std::size_t>(trial) % shifts.size()];
    const auto phi = random_potential(sft, 1 + static_cast<std::size_t>(trial) % 3, rng);
    const auto mu = equilibrium_state(sft, phi);
    CHECK(std::abs(free_energy(mu, phi) - pressure(sft, phi)) <= 1e-10);
  }
}

TEST_CASE("cylinder_measure is a probability on each level") {
  std::mt19937_64 rng(17);
  const Sft golden = golden_mean_shift();
  for (int trial = 0; trial < 10; ++trial) {
    const auto mu = equilibrium_state(golden, random_potential(golden, 3, rng));
    for (std::size_t n = 1; n <= 8; ++n) {
      double total = 0.0;
      for (const auto& w : cylinders(golden, n)) total += cylinder_measure(mu, w);
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    CHECK(cylinder_measure(mu, Word{0, 1, 1}) == 0.0);
    // Shift invariance: sum over predecessors.
    for (const auto& w : cylinders(golden, 4)) {
      double pre = 0.0;
      for (Symbol a = 0; a < 2; ++a) {
        Word x{a};
        x.insert(x.end(), w.begin(), w.end());
        pre += cylinder_measure(mu, x);
      }
      CHECK(std::abs(pre - cylinder_measure(mu, w)) <= 1e-12);
    }
  }
  const auto depth1 = equilibrium_state(golden, random_potential(golden, 1, rng));
  CHECK(cylinder_measure(depth1, Word{1}) == doctest::Approx(depth1.stationary()[1]).epsilon(1e-14));
}

TEST_CASE("entropy and integrals") {
  const Sft full = full_shift(2);
  Eigen::MatrixXd stay(2, 2);
  stay << 1, 0, 1, 0;
  Eigen::RowVectorXd pi(2);
  pi << 1, 0;
  const auto point = MarkovMeasure::from_parts(full, 1, stay, pi);
  CHECK(entropy(point) == 0.0);
  CHECK(integrate(point, Potential::constant(full, 1, 3.5)) == doctest::Approx(3.5));

  std::mt19937_64 rng(6);
  const auto mu = random_markov_measure(golden_mean_shift(), 2, rng);
  const auto a = random_potential(golden_mean_shift(), 2, rng);
  const auto b = random_potential(golden_mean_shift(), 3, rng);
  const auto sum = refine(a, 3).combine(1.0, b, 1.0);
  CHECK(integrate(mu, sum) == doctest::Approx(integrate(mu, a) + integrate(mu, b)).epsilon(1e-13));
  CHECK(entropy(mu) >= 0.0);
  CHECK(entropy(mu) <= std::log(kGolden) + 1e-12);
}

TEST_CASE("from_stochastic rejects malformed chains") {
  const Sft golden = golden_mean_shift();
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.5, 0.5, 0.5;  // puts mass on the forbidden 11
  CHECK_THROWS_AS(MarkovMeasure::from_stochastic(golden, 1, bad), InvalidArgument);
  Eigen::MatrixXd not_stochastic(2, 2);
  not_stochastic << 0.5, 0.4, 1.0, 0.0;
  CHECK_THROWS_AS(MarkovMeasure::from_stochastic(golden, 1, not_stochastic), InvalidArgument);
}

TEST_CASE("asymptotic variance examples") {
  const Sft full = full_shift(2);
  const auto half = equilibrium_state(full, Potential::constant(full, 1, -kLog2));
  const auto h = Potential::per_symbol(full, {0.7, -0.7});
  for (auto c : {VarianceConvention::one_sided, VarianceConvention::symmetric}) {
    CHECK(asymptotic_variance(half, h, h, c) == doctest::Approx(0.49).epsilon(1e-13));
  }

  // System B at q = 0: psi = g + alpha(0) jac under nu_0.
  const auto fam = system_b();
  const auto nu = nu_q(fam, 0.0);
  const auto psi = fam.g().combine(1.0, fam.jac(), closed_b::alpha(0.0));
  CHECK(std::abs(asymptotic_variance(nu, psi, psi, VarianceConvention::one_sided) - 0.05938725851975495) <= 1e-10);
  CHECK(std::abs(integrate(nu, psi)) <= 1e-10);
}

TEST_CASE("asymptotic variance matches the correlation series") {
  std::mt19937_64 rng(31);
  const std::vector<Sft> shifts{golden_mean_shift(), full_shift(2), full_shift(3)};
  for (int trial = 0; trial < 15; ++trial) {
    const Sft& sft = shifts[static_cast<std::size_t>(trial) % shifts.size()];
    const auto mu = equilibrium_state(sft, random_potential(sft, 3, rng, 0.5));
    const auto h1 = random_potential(sft, 2, rng);
    const auto h2 = random_potential(sft, 2, rng);
    for (bool sym : {false, true}) {
      const auto c = sym ? VarianceConvention::symmetric : VarianceConvention::one_sided;
      const double exact = asymptotic_variance(mu, h1, h2, c);
      CHECK(std::abs(exact - series_variance(mu, h1, h2, sym)) <= 1e-10 * (1.0 + std::abs(exact)));
    }
    CHECK(asymptotic_variance(mu, h1, h1, VarianceConvention::symmetric) >= -1e-14);
  }
}

TEST_CASE("Gibbs certificates") {
  const Sft full = full_shift(2);
  const auto exact = gibbs_certificate(full, Potential::constant(full, 1, -kLog2), 10);
  CHECK(exact.certified);
  CHECK(exact.c1 == doctest::Approx(1.0));
  CHECK(exact.c2 == doctest::Approx(1.0));
  CHECK(exact.worst_ratio_low == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact.worst_ratio_high == doctest::Approx(1.0).epsilon(1e-12));

  const auto fam = system_b();
  const double t0 = closed_b::T(0.0);
  const auto phi = family_phi(fam, 0.0, t0);
  const auto cert = gibbs_certificate(full, phi, 12);
  CHECK(cert.certified);
  CHECK(cert.cylinders_checked == 8190);  // every length 1..12
  // nu_0 is Bernoulli(x, x^2) here, so every ratio is 1.
  CHECK(cert.worst_ratio_low == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert.worst_ratio_high == doctest::Approx(1.0).epsilon(1e-12));

  const auto sym = gibbs_certificate(full, phi, 8, true);
  CHECK(sym.symmetric_constants);
  CHECK(sym.c1 == doctest::Approx(1.0 / sym.c2).epsilon(1e-14));
  CHECK(sym.certified);

  CHECK_THROWS_AS(gibbs_certificate(full, Potential::constant(full, 1, 0.0), 4), NotZeroPressure);

  // Negative control: Bernoulli(1/2,1/2) against the System B constants.
  const auto wrong = equilibrium_state(full, Potential::constant(full, 1, -kLog2));
  const auto neg = gibbs_check_measure(wrong, phi, 30);
  CHECK_FALSE(neg.certified);
  CHECK(neg.checked_depth <= 30);
}

TEST_CASE("Gibbs certificates on random normalized depth-3 potentials") {
  std::mt19937_64 rng(41);
  const Sft golden = golden_mean_shift();
  for (int trial = 0; trial < 10; ++trial) {
    const auto phi = normalize_to_zero_pressure(random_potential(golden, 3, rng));
    CHECK(gibbs_certificate(golden, phi, 12).certified);
  }
}

TEST_CASE("eigenmeasure conformality") {
  const Sft full = full_shift(2);
  CHECK(conformality_check(full, Potential::constant(full, 1, -kLog2), 10) <= 1e-12);
  const auto fam = system_b();
  const double t0 = closed_b::T(0.0);
  CHECK(conformality_check(full, family_phi(fam, 0.0, t0), 10) <= 1e-12);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto phi = normalize_to_zero_pressure(random_potential(golden_mean_shift(), 3, rng));
    CHECK(conformality_check(golden_mean_shift(), phi, 10) <= 1e-12);
  }

  // The relation at a wrong t: defect grows with |t - T|.
  const auto measure_pot = family_phi(fam, 0.0, t0);
  double previous = 0.0;
  for (double dt : {0.01, 0.05, 0.2}) {
    const double defect = eigenmeasure_defect(full, measure_pot, family_phi(fam, 0.0, t0 + dt), 8);
    CHECK(defect > previous);
    CHECK(defect > 1e-4);
    previous = defect;
  }
  CHECK_THROWS_AS(conformality_check(full, family_phi(fam, 0.0, t0 + 0.1), 4), NotZeroPressure);
}

TEST_CASE("variational principle against sampled Markov measures") {
  const auto fam = system_b();
  for (double q : {-2.0, 0.0, 2.0}) {
    const double t = solve_T(fam, q);
    const auto report = variational_principle_check(fam.sft(), family_phi(fam, q, t), 200, 99);
    CHECK(std::abs(report.equilibrium_free_energy - report.pressure) <= 1e-10);
    CHECK(report.max_sampled_free_energy <= report.pressure + 1e-10);
    CHECK(report.samples == 200);
  }
  const auto a = variational_principle_check(golden_mean_shift(), Potential::constant(golden_mean_shift(), 2, 0.0), 20, 5);
  const auto b = variational_principle_check(golden_mean_shift(), Potential::constant(golden_mean_shift(), 2, 0.0), 20, 5);
  CHECK(a.max_sampled_free_energy == b.max_sampled_free_energy);
}
