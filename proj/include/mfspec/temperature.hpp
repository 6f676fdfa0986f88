#pragma once

#include <optional>
#include <vector>

#include "mfspec/potential.hpp"
#include "mfspec/transfer.hpp"

namespace mfspec {

struct RootOptions {
  double tolerance = 1e-11;  // on |P(q, t)|
  double bracket_limit = 1e8;
  int max_iterations = 200;
};

/// The unique t with P(q g - t jac) = 0, by safeguarded Newton with a
/// bisection fallback. `warm_start` seeds the bracket.
double solve_T(const PotentialFamily& family, double q, std::optional<double> warm_start = {},
               const RootOptions& options = {});

/// Equilibrium state nu_q of phi_{q, T(q)}.
MarkovMeasure nu_q(const PotentialFamily& family, double q);

/// -int g dnu_q / int jac dnu_q.
double alpha(const PotentialFamily& family, double q);

/// Finite-difference and analytic partial derivatives of P(q, t).
struct PressurePartials {
  double dP_dt_fd = 0.0;
  double dP_dt_exact = 0.0;  // -int jac dnu_{q,t}
  double dP_dq_fd = 0.0;
  double dP_dq_exact = 0.0;  // int g dnu_{q,t}
};
PressurePartials pressure_partials(const PotentialFamily& family, double q, double t,
                                   double step = 1e-4);

inline constexpr double kFiniteDifferenceStep = 1e-3;

struct TemperatureCurve {
  std::vector<double> q;
  std::vector<double> T;
  std::vector<double> alpha;
  std::vector<double> T_prime_fd;
  std::vector<double> T_second_fd;
  std::vector<double> T_second_var;  // under convention_used
  std::vector<double> T_second_var_one_sided;
  std::vector<double> T_second_var_symmetric;
  std::vector<double> entropy;   // h(nu_q)
  std::vector<double> lyapunov;  // int jac dnu_q
  std::vector<double> vd_of_nu_q;
  VarianceConvention convention_used = VarianceConvention::one_sided;
  double fd_step = kFiniteDifferenceStep;

  std::size_t size() const { return q.size(); }
};

/// Uniform grid min, min+step, ..., up to max (inclusive within step/1e6).
std::vector<double> make_grid(double min, double max, double step);

/// Fills every curve field. Derivatives use Richardson-extrapolated central
/// differences; the variance convention closest to the finite-difference T''
/// at three interior points is selected.
TemperatureCurve temperature_curve(const PotentialFamily& family, const std::vector<double>& q_grid);

struct DegeneracyEvidence {
  bool is_nu0 = false;
  double max_T_second_var = 0.0;
  double alpha_variation = 0.0;
  double threshold = 1e-9;
};

/// nu = nu_0 iff T'' vanishes and alpha is constant along the curve.
DegeneracyEvidence degeneracy_test(const TemperatureCurve& curve);

}  // namespace mfspec
