#include "mfspec/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfspec/errors.hpp"
#include "mfspec/transfer.hpp"

namespace mfspec {

Potential::Potential(Sft sft, std::size_t depth, std::vector<Word> words, std::vector<double> values)
    : sft_(std::move(sft)), depth_(depth), words_(std::move(words)), values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("potential values must be finite");
  }
  index_ = CylinderIndex(sft_, words_);
}

Potential Potential::from_values(const Sft& sft, std::size_t depth,
                                 const std::map<Word, double>& values) {
  auto words = cylinders(sft, depth);
  std::vector<double> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    const auto it = values.find(w);
    if (it == values.end()) {
      throw InvalidArgument("potential has no value for cylinder '" + word_to_string(w) + "'");
    }
    out.push_back(it->second);
  }
  for (const auto& [w, v] : values) {
    if (w.size() != depth) {
      throw InvalidArgument("potential entry '" + word_to_string(w) + "' has the wrong length");
    }
    if (!sft.admissible(w)) {
      throw InadmissibleWord("potential entry for inadmissible word '" + word_to_string(w) + "'");
    }
  }
  return Potential(sft, depth, std::move(words), std::move(out));
}

Potential Potential::from_function(const Sft& sft, std::size_t depth,
                                   const std::function<double(const Word&)>& fn) {
  auto words = cylinders(sft, depth);
  std::vector<double> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(fn(w));
  return Potential(sft, depth, std::move(words), std::move(out));
}

Potential Potential::constant(const Sft& sft, std::size_t depth, double c) {
  return from_function(sft, depth, [c](const Word&) { return c; });
}

Potential Potential::per_symbol(const Sft& sft, std::vector<double> values) {
  if (values.size() != sft.alphabet_size()) {
    throw InvalidArgument("per-symbol potential needs one value per symbol");
  }
  return from_function(sft, 1, [&values](const Word& w) { return values[w.front()]; });
}

double Potential::evaluate(const Word& word) const {
  if (word.size() < depth_) throw WordTooShort("word shorter than potential depth");
  if (!sft_.admissible(word)) throw InadmissibleWord("'" + word_to_string(word) + "' is inadmissible");
  return values_[index_.find(word.data())];
}

double Potential::at(const Symbol* first) const {
  const std::size_t i = index_.find(first);
  if (i == CylinderIndex::npos) throw InadmissibleWord("inadmissible cylinder in symbol stream");
  return values_[i];
}

double Potential::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double Potential::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

Potential Potential::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) throw InvalidArgument("with_values: wrong number of values");
  return Potential(sft_, depth_, words_, std::move(values));
}

Potential Potential::shifted(double c) const {
  auto v = values_;
  for (double& x : v) x += c;
  return Potential(sft_, depth_, words_, std::move(v));
}

Potential Potential::scaled(double s) const {
  auto v = values_;
  for (double& x : v) x *= s;
  return Potential(sft_, depth_, words_, std::move(v));
}

Potential Potential::combine(double a, const Potential& other, double b) const {
  if (other.depth_ != depth_ || other.sft_.transitions() != sft_.transitions()) {
    throw InvalidArgument("combine: potentials must share the shift and depth");
  }
  auto v = values_;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * v[i] + b * other.values_[i];
  return Potential(sft_, depth_, words_, std::move(v));
}

JacobianPotential::JacobianPotential(Potential base) : base_(std::move(base)) {
  if (base_.min_value() <= 0.0) {
    throw InvalidArgument("log|Jac f| must be strictly positive on every cylinder");
  }
}

double birkhoff_sum(const Potential& potential, std::span<const Symbol> symbols, std::size_t n) {
  const std::size_t m = potential.depth();
  if (n == 0) return 0.0;
  if (symbols.size() < n + m - 1) throw StreamExhausted("symbol stream too short for Birkhoff sum");
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) sum += potential.at(symbols.data() + k);
  return sum;
}

Potential refine(const Potential& potential, std::size_t new_depth) {
  if (new_depth < potential.depth()) throw InvalidArgument("refine: new depth below current depth");
  if (new_depth == potential.depth()) return potential;
  return Potential::from_function(potential.sft(), new_depth,
                                  [&potential](const Word& w) { return potential.at(w.data()); });
}

Potential normalize_to_zero_pressure(const Potential& g_raw) {
  return g_raw.shifted(-pressure(g_raw.sft(), g_raw));
}

PotentialFamily PotentialFamily::make(const Potential& g_raw, const JacobianPotential& jac) {
  if (g_raw.sft().transitions() != jac.base().sft().transitions()) {
    throw InvalidArgument("g and jac must be defined on the same shift");
  }
  const std::size_t depth = std::max(g_raw.depth(), jac.base().depth());
  const Potential g_refined = refine(g_raw, depth);
  const double shift = pressure(g_refined.sft(), g_refined);
  return PotentialFamily(g_refined.shifted(-shift), JacobianPotential(refine(jac.base(), depth)), shift);
}

Potential family_phi(const PotentialFamily& family, double q, double t) {
  return family.g().combine(q, family.jac(), -t);
}

}  // namespace mfspec
