#pragma once

#include <cmath>
#include <numbers>

#include "mfspec/potential.hpp"
#include "mfspec/sft.hpp"

namespace mfspec::testing {

inline const double kLog2 = std::log(2.0);
inline const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

/// Full 2-shift, g = -log 2, jac = log 2: the straight-line case.
inline PotentialFamily system_a() {
  const Sft sft = full_shift(2);
  return PotentialFamily::make(Potential::constant(sft, 1, 0.0),
                               JacobianPotential(Potential::constant(sft, 1, kLog2)));
}

/// Full 2-shift, g = -log 2, jac = (log 2, log 4).
inline PotentialFamily system_b() {
  const Sft sft = full_shift(2);
  return PotentialFamily::make(Potential::constant(sft, 1, 0.0),
                               JacobianPotential(Potential::per_symbol(sft, {kLog2, 2.0 * kLog2})));
}

/// Golden-mean shift, g = -htop, jac = (log 2, log 3).
inline PotentialFamily golden_system() {
  const Sft sft = golden_mean_shift();
  return PotentialFamily::make(Potential::constant(sft, 1, 0.0),
                               JacobianPotential(Potential::per_symbol(sft, {kLog2, std::log(3.0)})));
}

/// Closed forms for System B: x(q) solves x + x^2 = 2^q and T = -log2 x.
namespace closed_b {
inline double x(double q) { return (-1.0 + std::sqrt(1.0 + std::pow(2.0, q + 2.0))) / 2.0; }
inline double T(double q) { return -std::log2(x(q)); }
inline double alpha(double q) { return (1.0 + x(q)) / (2.0 * x(q) + 1.0); }
inline double T_second(double q) { return std::pow(2.0, q) * kLog2 / std::pow(2.0 * x(q) + 1.0, 3.0); }
}  // namespace closed_b

}  // namespace mfspec::testing
