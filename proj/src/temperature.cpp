#include "mfspec/temperature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfspec/errors.hpp"

namespace mfspec {

namespace {

struct Evaluation {
  double pressure;
  double slope;  // dP/dt = -int jac dnu_{q,t}
};

Evaluation evaluate(const PotentialFamily& family, double q, double t) {
  const Potential phi = family_phi(family, q, t);
  const MarkovMeasure nu = equilibrium_state(family.sft(), phi);
  return {pressure(family.sft(), phi), -integrate(nu, family.jac())};
}

double pressure_at(const PotentialFamily& family, double q, double t) {
  return pressure(family.sft(), family_phi(family, q, t));
}

template <typename F>
double richardson_first(F&& f, double x, double h) {
  const double d_h = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d_half = (f(x + h / 2) - f(x - h / 2)) / h;
  return (4.0 * d_half - d_h) / 3.0;
}

}  // namespace

double solve_T(const PotentialFamily& family, double q, std::optional<double> warm_start,
               const RootOptions& options) {
  const double t0 = warm_start.value_or(0.0);
  Evaluation e0 = evaluate(family, q, t0);
  if (e0.pressure == 0.0) return t0;

  // P(q, .) is strictly decreasing: expand away from t0 until the sign flips.
  double lo = t0;
  double hi = t0;
  double step = 1.0;
  if (e0.pressure > 0.0) {
    for (hi = t0 + step; pressure_at(family, q, hi) > 0.0; hi = t0 + step) {
      lo = hi;
      step *= 2.0;
      if (step > options.bracket_limit) throw BracketingFailure("no sign change above t = " + std::to_string(t0));
    }
  } else {
    for (lo = t0 - step; pressure_at(family, q, lo) < 0.0; lo = t0 - step) {
      hi = lo;
      step *= 2.0;
      if (step > options.bracket_limit) throw BracketingFailure("no sign change below t = " + std::to_string(t0));
    }
  }

  double t = std::clamp(t0, lo, hi);
  double best_t = t;
  double best_abs = std::numeric_limits<double>::infinity();
  int polish = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Evaluation e = evaluate(family, q, t);
    if (std::abs(e.pressure) < best_abs) {
      best_abs = std::abs(e.pressure);
      best_t = t;
    } else if (best_abs <= options.tolerance) {
      break;  // rounding floor
    }
    if (e.pressure == 0.0) return t;
    if (e.pressure > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    // A few Newton steps past the tolerance so finite differences of T see
    // roots at rounding level.
    if (best_abs <= options.tolerance && ++polish > 3) break;
    double next = t - e.pressure / e.slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  if (best_abs > options.tolerance) {
    throw BracketingFailure("temperature root did not reach tolerance at q = " + std::to_string(q));
  }
  return best_t;
}

MarkovMeasure nu_q(const PotentialFamily& family, double q) {
  return equilibrium_state(family.sft(), family_phi(family, q, solve_T(family, q)));
}

double alpha(const PotentialFamily& family, double q) {
  const MarkovMeasure nu = nu_q(family, q);
  return -integrate(nu, family.g()) / integrate(nu, family.jac());
}

PressurePartials pressure_partials(const PotentialFamily& family, double q, double t, double step) {
  PressurePartials out;
  out.dP_dt_fd = richardson_first([&](double x) { return pressure_at(family, q, x); }, t, step);
  out.dP_dq_fd = richardson_first([&](double x) { return pressure_at(family, x, t); }, q, step);
  const MarkovMeasure nu = equilibrium_state(family.sft(), family_phi(family, q, t));
  out.dP_dt_exact = -integrate(nu, family.jac());
  out.dP_dq_exact = integrate(nu, family.g());
  return out;
}

std::vector<double> make_grid(double min, double max, double step) {
  if (!(step > 0.0) || !(max >= min)) throw InvalidArgument("grid needs min <= max and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-6)) + 1;
  std::vector<double> grid(count);
  // Snap to 1e-12 so decimal grids hit the nearest doubles (and 0, 1 exactly).
  for (std::size_t i = 0; i < count; ++i) grid[i] = std::round((min + static_cast<double>(i) * step) * 1e12) / 1e12;
  return grid;
}

TemperatureCurve temperature_curve(const PotentialFamily& family, const std::vector<double>& q_grid) {
  for (std::size_t i = 1; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > q_grid[i - 1])) throw InvalidArgument("q grid must be strictly increasing");
  }
  TemperatureCurve c;
  c.q = q_grid;
  const double h = c.fd_step;
  std::optional<double> warm;
  for (double q : q_grid) {
    const double t = solve_T(family, q, warm);
    warm = t;
    const double tp = solve_T(family, q + h, t);
    const double tm = solve_T(family, q - h, t);
    const double tp2 = solve_T(family, q + h / 2, t);
    const double tm2 = solve_T(family, q - h / 2, t);
    const double d1_h = (tp - tm) / (2.0 * h);
    const double d1_half = (tp2 - tm2) / h;
    const double d2_h = (tp - 2.0 * t + tm) / (h * h);
    const double d2_half = (tp2 - 2.0 * t + tm2) / (h * h / 4.0);

    const MarkovMeasure nu = equilibrium_state(family.sft(), family_phi(family, q, t));
    const double lyap = integrate(nu, family.jac());
    const double a = -integrate(nu, family.g()) / lyap;
    const double h_nu = entropy(nu);
    // psi_q = g - T'(q) jac with T'(q) = -alpha(q).
    const Potential psi = family.g().combine(1.0, family.jac(), a);

    c.T.push_back(t);
    c.alpha.push_back(a);
    c.T_prime_fd.push_back((4.0 * d1_half - d1_h) / 3.0);
    c.T_second_fd.push_back((4.0 * d2_half - d2_h) / 3.0);
    c.T_second_var_one_sided.push_back(
        asymptotic_variance(nu, psi, psi, VarianceConvention::one_sided) / lyap);
    c.T_second_var_symmetric.push_back(
        asymptotic_variance(nu, psi, psi, VarianceConvention::symmetric) / lyap);
    c.entropy.push_back(h_nu);
    c.lyapunov.push_back(lyap);
    c.vd_of_nu_q.push_back(h_nu / lyap);
  }

  std::vector<std::size_t> probes;
  const std::size_t n = c.size();
  if (n >= 3) {
    for (std::size_t k : {n / 4, n / 2, (3 * n) / 4}) probes.push_back(std::clamp<std::size_t>(k, 1, n - 2));
  } else {
    for (std::size_t k = 0; k < n; ++k) probes.push_back(k);
  }
  double miss_one = 0.0;
  double miss_sym = 0.0;
  for (std::size_t k : probes) {
    miss_one += std::abs(c.T_second_var_one_sided[k] - c.T_second_fd[k]);
    miss_sym += std::abs(c.T_second_var_symmetric[k] - c.T_second_fd[k]);
  }
  // Ties keep the one-sided sum.
  c.convention_used = miss_sym + 1e-12 < miss_one ? VarianceConvention::symmetric : VarianceConvention::one_sided;
  c.T_second_var = c.convention_used == VarianceConvention::symmetric ? c.T_second_var_symmetric
                                                                       : c.T_second_var_one_sided;
  return c;
}

DegeneracyEvidence degeneracy_test(const TemperatureCurve& curve) {
  DegeneracyEvidence ev;
  for (double v : curve.T_second_var) ev.max_T_second_var = std::max(ev.max_T_second_var, std::abs(v));
  if (!curve.alpha.empty()) {
    const auto [lo, hi] = std::minmax_element(curve.alpha.begin(), curve.alpha.end());
    ev.alpha_variation = *hi - *lo;
  }
  ev.is_nu0 = ev.max_T_second_var <= ev.threshold && ev.alpha_variation <= ev.threshold;
  return ev;
}

}  // namespace mfspec
