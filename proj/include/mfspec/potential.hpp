#pragma once

#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "mfspec/sft.hpp"

namespace mfspec {

/// Real function on sequences that depends only on the leading `depth` symbols.
///
/// Values are stored in the order of cylinders(sft, depth). Hölder potentials
/// are represented by such finite-depth approximations.
class Potential {
 public:
  static Potential from_values(const Sft& sft, std::size_t depth, const std::map<Word, double>& values);
  static Potential from_function(const Sft& sft, std::size_t depth,
                                 const std::function<double(const Word&)>& fn);
  static Potential constant(const Sft& sft, std::size_t depth, double c);
  /// Depth-1 potential with one value per symbol.
  static Potential per_symbol(const Sft& sft, std::vector<double> values);

  const Sft& sft() const { return sft_; }
  std::size_t depth() const { return depth_; }
  const std::vector<Word>& words() const { return words_; }
  std::span<const double> values() const { return values_; }
  double value(std::size_t index) const { return values_[index]; }

  /// Value on the leading cylinder of `word`.
  double evaluate(const Word& word) const;
  /// Lookup without admissibility checks; `first` must point at `depth()` symbols.
  double at(const Symbol* first) const;

  double min_value() const;
  double max_value() const;

  /// Same cylinders with new values, in words() order.
  Potential with_values(std::vector<double> values) const;
  Potential shifted(double c) const;
  Potential scaled(double s) const;
  /// Pointwise a*this + b*other; both must share the Sft and depth.
  Potential combine(double a, const Potential& other, double b) const;

 private:
  Potential(Sft sft, std::size_t depth, std::vector<Word> words, std::vector<double> values);

  Sft sft_;
  std::size_t depth_;
  std::vector<Word> words_;
  std::vector<double> values_;
  CylinderIndex index_;
};

/// Strictly positive potential standing for log|Jac f| of a uniformly expanding map.
class JacobianPotential {
 public:
  explicit JacobianPotential(Potential base);
  const Potential& base() const { return base_; }
  operator const Potential&() const { return base_; }

 private:
  Potential base_;
};

/// Sum of potential values along the first n shifts of `symbols`.
double birkhoff_sum(const Potential& potential, std::span<const Symbol> symbols, std::size_t n);

/// Depth-m' potential equal to `potential` as a function on sequences.
Potential refine(const Potential& potential, std::size_t new_depth);

/// g - P(g); the result has zero pressure.
Potential normalize_to_zero_pressure(const Potential& g_raw);

/// The pair (g, log|Jac f|) on a common depth with g normalized to zero pressure.
class PotentialFamily {
 public:
  /// Refines both to a common depth and normalizes g. The normalization
  /// constant is computed once here.
  static PotentialFamily make(const Potential& g_raw, const JacobianPotential& jac);

  const Potential& g() const { return g_; }
  const Potential& jac() const { return jac_.base(); }
  const Sft& sft() const { return g_.sft(); }
  std::size_t depth() const { return g_.depth(); }
  /// Constant subtracted from the raw g, i.e. P(g_raw).
  double normalization_shift() const { return shift_; }

 private:
  PotentialFamily(Potential g, JacobianPotential jac, double shift)
      : g_(std::move(g)), jac_(std::move(jac)), shift_(shift) {}

  Potential g_;
  JacobianPotential jac_;
  double shift_;
};

/// Pointwise q*g - t*jac.
Potential family_phi(const PotentialFamily& family, double q, double t);

}  // namespace mfspec
