#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfspec/potential.hpp"
#include "mfspec/sft.hpp"
#include "mfspec/temperature.hpp"

namespace mfspec {

struct SpectrumPoint {
  double q = 0.0;
  double alpha = 0.0;
  double S = 0.0;     // T(q) + q alpha(q)
  double S_vd = 0.0;  // h(nu_q) / int jac dnu_q
};

SpectrumPoint spectrum_point(const TemperatureCurve& curve, std::size_t index);
std::vector<SpectrumPoint> spectrum_points(const TemperatureCurve& curve);

struct LegendreResiduals {
  double identity = 0.0;       // max |S - (T + q alpha)| with S from h/L
  double slope = 0.0;          // max interior |dS/dalpha - q|
  double transform = 0.0;      // max |T(q) - max_j (S_j - q alpha_j)|
  double max_concavity = 0.0;  // max second divided difference of S in alpha
};

/// Throws DegenerateSpectrum when alpha is constant along the curve.
LegendreResiduals legendre_check(const TemperatureCurve& curve);

/// Range of sum(num)/sum(den) over all invariant measures, i.e. over the
/// cycles of the state graph; den must be positive.
struct RatioRange {
  double min = 0.0;
  double max = 0.0;
};
RatioRange cycle_ratio_range(const Potential& num, const Potential& den);

/// Birkhoff ratio -sum g / sum jac over one period of a periodic orbit.
double periodic_ratio(const PotentialFamily& family, const Word& orbit);

struct Endpoints {
  // Method (a): periodic orbits of period <= max_period.
  double periodic_alpha1 = 0.0;
  double periodic_alpha2 = 0.0;
  Word periodic_argmin;
  Word periodic_argmax;
  std::size_t max_period = 0;
  std::size_t orbits_scanned = 0;
  // Method (b): alpha(+q_probe), alpha(-q_probe).
  double probe_alpha1 = 0.0;
  double probe_alpha2 = 0.0;
  double q_probe = 0.0;
  // Exact cycle extremes of the state graph.
  double cycle_alpha1 = 0.0;
  double cycle_alpha2 = 0.0;
  double spread = 0.0;  // max disagreement between methods (a) and (b)
};

Endpoints endpoints(const PotentialFamily& family, std::size_t max_period, double q_probe = 40.0);

struct VariationalTReport {
  double q = 0.0;
  double T = 0.0;
  double periodic_inf = 0.0;          // inf over orbits of q int g / (-int jac)
  double gap = 0.0;                   // periodic_inf - (-T)
  double equality_residual = 0.0;     // at nu_q, with entropy
  std::size_t orbits_scanned = 0;
};

VariationalTReport variational_T_check(const PotentialFamily& family, double q, std::size_t max_period);

struct ConditionalReport {
  double q = 0.0;
  double alpha = 0.0;
  double bound = 0.0;              // T(q) + q alpha(q)
  double max_ratio = 0.0;          // max sampled h/L
  double max_violation = 0.0;      // max(h/L - bound)
  double equality_residual = 0.0;  // |h/L(nu_q) - bound|
  double max_constraint_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

/// Samples Markov measures with -int g = alpha(q) int jac by tilting nu_q and
/// re-projecting onto the constraint. Throws InfeasibleConstraint when the
/// level is outside the achievable ratio range.
ConditionalReport conditional_variational_check(const PotentialFamily& family, double q,
                                                std::size_t sample_count, std::uint64_t seed);

/// Same check at an explicit level; `bound` is the value h/L may not exceed.
ConditionalReport conditional_variational_at(const PotentialFamily& family, double level, double bound,
                                             std::size_t sample_count, std::uint64_t seed);

}  // namespace mfspec
