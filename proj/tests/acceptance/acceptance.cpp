// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mfspec/errors.hpp"
#include "mfspec/orbit_lab.hpp"
#include "mfspec/spectrum.hpp"
#include "mfspec/temperature.hpp"
#include "mfspec/transfer.hpp"

using namespace mfspec;
using namespace mfspec::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;  // 0 for none
  std::function<Outcome()> body;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const std::vector<double> kCheckQ{-2.0, 0.0, 1.0, 2.0};

std::vector<double> full_grid() { return make_grid(-8.0, 8.0, 0.1); }

Outcome temperature_line() {
  const auto curve = temperature_curve(system_a(), full_grid());
  double worst_T = 0.0, worst_alpha = 0.0;
  for (std::size_t i = 0; i < curve.q.size(); ++i) {
    worst_T = std::max(worst_T, std::abs(curve.T[i] - (1.0 - curve.q[i])));
    worst_alpha = std::max(worst_alpha, std::abs(curve.alpha[i] - 1.0));
  }
  const auto deg = degeneracy_test(curve);
  return {worst_T <= 1e-10 && worst_alpha <= 1e-10 && deg.is_nu0,
          fmt("max|T-(1-q)|=%.2e max|alpha-1|=%.2e nu=nu0:%s", worst_T, worst_alpha, deg.is_nu0 ? "yes" : "no")};
}

Outcome system_b_fixtures() {
  const auto fam = system_b();
  const auto curve = temperature_curve(fam, {0.0, 1.0});
  const double T0 = curve.T[0], T1 = curve.T[1], a0 = curve.alpha[0];
  const double fd = curve.T_second_fd[0], var = curve.T_second_var[0];
  const double expected = 0.0619970;
  const bool ok = std::abs(T0 - 0.6942419136) <= 1e-9 && std::abs(T1) <= 1e-10 &&
                  std::abs(a0 - 0.7236067977) <= 1e-8 && std::abs(fd - expected) <= 1e-5 &&
                  std::abs(var - expected) <= 1e-5 && std::abs(fd - var) <= 1e-5;
  return {ok, fmt("T(0)=%.10f T(1)=%.1e alpha(0)=%.10f T''fd=%.7f T''var=%.7f (%s)", T0, T1, a0, fd, var,
                  to_string(curve.convention_used))};
}

Outcome legendre_pair() {
  const auto res = legendre_check(temperature_curve(system_b(), full_grid()));
  return {res.slope <= 5e-3 && res.transform <= 1e-4 && res.max_concavity <= 1e-9,
          fmt("slope=%.2e transform=%.2e concavity=%.2e", res.slope, res.transform, res.max_concavity)};
}

Outcome completeness() {
  const auto fam = system_b();
  const auto e = endpoints(fam, 12);
  const bool exact = e.periodic_alpha1 == 0.5 && e.periodic_alpha2 == 1.0;
  const double probe = std::max(std::abs(e.probe_alpha1 - 0.5), std::abs(e.probe_alpha2 - 1.0));
  bool infeasible = false;
  try {
    conditional_variational_at(fam, 0.3, 1.0, 10, 1);
  } catch (const InfeasibleConstraint&) {
    infeasible = true;
  }
  return {exact && probe <= 1e-6 && infeasible,
          fmt("periodic [%.17g, %.17g] over %zu orbits, probe error %.2e, alpha=0.3 infeasible:%s",
              e.periodic_alpha1, e.periodic_alpha2, e.orbits_scanned, probe, infeasible ? "yes" : "no")};
}

Outcome gibbs() {
  const std::pair<const char*, PotentialFamily> systems[] = {
      {"A", system_a()}, {"B", system_b()}, {"golden", golden_system()}};
  bool ok = true;
  std::ostringstream detail;
  std::uint64_t seed = 7;
  for (const auto& [name, fam] : systems) {
    std::size_t cylinders = 0;
    for (double q : kCheckQ) {
      const auto phi = family_phi(fam, q, solve_T(fam, q));
      const auto cert = gibbs_certificate(fam.sft(), phi, 12);
      ok = ok && cert.certified;
      cylinders = cert.cylinders_checked;
    }
    const auto phi0 = family_phi(fam, 0.0, solve_T(fam, 0.0));
    std::mt19937_64 rng(seed++);
    const auto wrong = random_markov_measure(fam.sft(), state_length(phi0.depth()), rng);
    const auto control = gibbs_check_measure(wrong, phi0, 30);
    ok = ok && !control.certified;
    detail << name << ": " << cylinders << " cylinders/q, control rejected at depth " << control.checked_depth << "; ";
  }
  return {ok, detail.str()};
}

Outcome conformality() {
  const auto fam = system_b();
  double worst = 0.0;
  for (double q : kCheckQ) {
    worst = std::max(worst, conformality_check(fam.sft(), family_phi(fam, q, solve_T(fam, q)), 10));
  }
  return {worst <= 1e-12, fmt("max defect %.2e over q in {-2,0,1,2}, depth 10", worst)};
}

Outcome variational() {
  const std::pair<const char*, PotentialFamily> systems[] = {
      {"A", system_a()}, {"B", system_b()}, {"golden", golden_system()}};
  double eq = 0.0, sampled = -1e300, cond = -1e300, cond_eq = 0.0;
  std::uint64_t seed = 100;
  for (const auto& [name, fam] : systems) {
    for (double q : kCheckQ) {
      const auto vp = variational_principle_check(fam.sft(), family_phi(fam, q, solve_T(fam, q)), 200, seed++);
      eq = std::max(eq, std::abs(vp.equilibrium_free_energy - vp.pressure));
      sampled = std::max(sampled, vp.max_sampled_free_energy - vp.pressure);
      const auto cv = conditional_variational_check(fam, q, 200, seed++);
      cond = std::max(cond, cv.max_violation);
      cond_eq = std::max(cond_eq, cv.equality_residual);
    }
  }
  return {eq <= 1e-10 && sampled <= 1e-10 && cond <= 1e-8 && cond_eq <= 1e-8,
          fmt("|h+int phi-P|=%.2e max sampled excess=%.2e conditional violation=%.2e equality=%.2e", eq, sampled,
              cond, cond_eq)};
}

Outcome concentration() {
  const auto rep = level_set_concentration(system_b(), 0.0, 5000, 2000, 0.02, 20240611);
  return {rep.fraction >= 0.95, fmt("fraction=%.4f alpha=%.6f mean=%.6f", rep.fraction, rep.alpha, rep.mean_ratio)};
}

Outcome irregular() {
  const auto rec = irregular_point(system_b(), Word{0}, Word{1}, BlockSchedule::geometric(4.0, 1000000), 1000000);
  return {rec.spread >= rec.threshold && rec.spread >= 0.4,
          fmt("tail ratios [%.4f, %.4f] spread=%.4f threshold=%.4f", rec.tail_min, rec.tail_max, rec.spread,
              rec.threshold)};
}

Outcome derivatives() {
  const std::pair<const char*, PotentialFamily> systems[] = {{"B", system_b()}, {"golden", golden_system()}};
  double prime = 0.0, dt = 0.0, dq = 0.0;
  for (const auto& [name, fam] : systems) {
    const auto curve = temperature_curve(fam, full_grid());
    for (std::size_t i = 0; i < curve.q.size(); ++i) {
      prime = std::max(prime, std::abs(curve.T_prime_fd[i] + curve.alpha[i]));
      for (double shift : {0.0, 0.5}) {
        const auto p = pressure_partials(fam, curve.q[i], curve.T[i] + shift);
        dt = std::max(dt, std::abs(p.dP_dt_fd - p.dP_dt_exact));
        dq = std::max(dq, std::abs(p.dP_dq_fd - p.dP_dq_exact));
      }
    }
  }
  return {prime <= 1e-6 && dt <= 1e-8 && dq <= 1e-8,
          fmt("max|T'+alpha|=%.2e max|dP/dt+int jac|=%.2e max|dP/dq-int g|=%.2e", prime, dt, dq)};
}

Outcome vd_identity() {
  const std::pair<const char*, PotentialFamily> systems[] = {
      {"A", system_a()}, {"B", system_b()}, {"golden", golden_system()}};
  double worst = 0.0;
  for (const auto& [name, fam] : systems) {
    const auto curve = temperature_curve(fam, full_grid());
    for (std::size_t i = 0; i < curve.q.size(); ++i) {
      worst = std::max(worst, std::abs(curve.vd_of_nu_q[i] - (curve.T[i] + curve.q[i] * curve.alpha[i])));
    }
  }
  return {worst <= 1e-8, fmt("max|h/L-(T+q alpha)|=%.2e", worst)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form temperature line", 1.0, temperature_line},
      {2, "System B closed-form fixtures", 5.0, system_b_fixtures},
      {3, "Legendre pair", 0.0, legendre_pair},
      {4, "completeness and endpoints", 0.0, completeness},
      {5, "Gibbs certificate", 0.0, gibbs},
      {6, "conformality", 0.0, conformality},
      {7, "variational principle", 0.0, variational},
      {8, "level-set concentration", 30.0, concentration},
      {9, "irregular point", 10.0, irregular},
      {10, "derivative identities", 0.0, derivatives},
      {11, "volume dimension identity", 0.0, vd_identity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt(" [over %.0f s budget]", c.budget_seconds);
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), o.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
