#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mfspec/potential.hpp"
#include "mfspec/sft.hpp"

namespace mfspec {

/// Length of the Markov states used for a depth-m potential: max(m-1, 1).
std::size_t state_length(std::size_t potential_depth);

/// Higher-block transition matrix weighted by exp(potential).
struct WeightedMatrix {
  std::vector<Word> states;
  Eigen::MatrixXd matrix;
};

/// Entry (w, w') is exp(potential(w·last(w'))) when w' follows w, else 0.
WeightedMatrix weighted_matrix(const Sft& sft, const Potential& potential);

struct PerronOptions {
  double tolerance = 1e-13;
  long max_iterations = 1'000'000;
};

struct PerronData {
  std::vector<Word> states;
  double lambda = 0.0;
  Eigen::VectorXd right;  // max entry 1
  Eigen::VectorXd left;   // left . right = 1
  long iterations = 0;
  double residual = 0.0;
};

/// Perron root and eigenvectors by power iteration from the all-ones vector.
///
/// Irreducible matrices with a nontrivial period are iterated as M + sI,
/// which has the same eigenvectors and a strictly dominant root.
PerronData perron(const Eigen::MatrixXd& matrix, const PerronOptions& options = {});
PerronData perron(const WeightedMatrix& weighted, const PerronOptions& options = {});

/// Topological pressure log(lambda) of a locally constant potential.
double pressure(const Sft& sft, const Potential& potential);

/// Stationary Markov chain on cylinder states.
class MarkovMeasure {
 public:
  /// Chain with the given row-stochastic matrix on cylinders(sft, state_length).
  /// The stationary vector is computed here.
  static MarkovMeasure from_stochastic(const Sft& sft, std::size_t state_length,
                                       Eigen::MatrixXd stochastic);
  static MarkovMeasure from_parts(const Sft& sft, std::size_t state_length,
                                  Eigen::MatrixXd stochastic, Eigen::RowVectorXd stationary);

  const Sft& sft() const { return sft_; }
  std::size_t state_length() const { return state_length_; }
  const std::vector<Word>& states() const { return states_; }
  const Eigen::MatrixXd& stochastic() const { return stochastic_; }
  const Eigen::RowVectorXd& stationary() const { return stationary_; }
  std::size_t state_index(const Symbol* first) const { return index_.find(first); }

 private:
  MarkovMeasure(Sft sft, std::size_t state_length, std::vector<Word> states,
                Eigen::MatrixXd stochastic, Eigen::RowVectorXd stationary);

  Sft sft_;
  std::size_t state_length_;
  std::vector<Word> states_;
  Eigen::MatrixXd stochastic_;
  Eigen::RowVectorXd stationary_;
  CylinderIndex index_;
};

/// Equilibrium state of `potential` via Perron stochasticization.
MarkovMeasure equilibrium_state(const Sft& sft, const Potential& potential);

/// Exact cylinder mass; 0 for inadmissible words. Words shorter than the
/// state length are summed over their state extensions.
double cylinder_measure(const MarkovMeasure& measure, const Word& word);

double entropy(const MarkovMeasure& measure);
double integrate(const MarkovMeasure& measure, const Potential& potential);
/// h(measure) + integral of the potential.
double free_energy(const MarkovMeasure& measure, const Potential& potential);

enum class VarianceConvention { one_sided, symmetric };
const char* to_string(VarianceConvention convention);

/// Correlation sum of h1 against h2 along the chain, evaluated exactly with
/// the fundamental matrix. one_sided: sum over k >= 0 of Cov(h1, h2∘σ^k);
/// symmetric: Cov(h1,h2) + sum over k >= 1 of both orderings.
double asymptotic_variance(const MarkovMeasure& measure, const Potential& h1, const Potential& h2,
                           VarianceConvention convention);

inline constexpr double kZeroPressureTolerance = 1e-9;

struct GibbsCertificate {
  double c1 = 0.0;
  double c2 = 0.0;
  std::size_t checked_depth = 0;
  std::size_t cylinders_checked = 0;
  double worst_ratio_low = 0.0;
  double worst_ratio_high = 0.0;
  bool symmetric_constants = false;
  bool certified = false;
};

/// Constants (c1, c2) bounding nu[w] / exp(S_n phi) for the equilibrium
/// state of a zero-pressure potential, read off the Perron vectors.
std::pair<double, double> gibbs_bounds(const Sft& sft, const Potential& potential);

/// A priori Gibbs constants from the eigendata, plus the exhaustive range of
/// nu[w] / exp(S_n phi) over every cylinder of length <= max_depth.
/// With `symmetric_constants` the bounds are widened to c1 = 1/c2.
GibbsCertificate gibbs_certificate(const Sft& sft, const Potential& potential, std::size_t max_depth,
                                   bool symmetric_constants = false);

/// Exhaustive Gibbs ratio range of an arbitrary measure against the
/// constants of `potential`; used for negative controls.
GibbsCertificate gibbs_check_measure(const MarkovMeasure& measure, const Potential& potential,
                                     std::size_t max_depth);

/// Mass of [w] under the eigenmeasure (right Perron vector) of `potential`.
class Eigenmeasure {
 public:
  Eigenmeasure(const Sft& sft, const Potential& potential);
  double mass(const Word& word) const;
  double lambda() const { return perron_.lambda; }

 private:
  Sft sft_;
  Potential potential_;
  PerronData perron_;
  CylinderIndex index_;
  std::size_t state_length_;
  double total_;
};

/// Max over cylinders [w] with depth <= |w| <= max_depth of
/// |m(σ[w]) - exp(-relation(w)) m([w])|, m the eigenmeasure of measure_potential.
double eigenmeasure_defect(const Sft& sft, const Potential& measure_potential,
                           const Potential& relation_potential, std::size_t max_depth);

/// eigenmeasure_defect of a zero-pressure potential against itself.
double conformality_check(const Sft& sft, const Potential& potential, std::size_t max_depth);

/// Random irreducible Markov measure with full support on the states of the given length.
MarkovMeasure random_markov_measure(const Sft& sft, std::size_t state_length, std::mt19937_64& rng);

struct VariationalReport {
  double pressure = 0.0;
  double equilibrium_free_energy = 0.0;
  double max_sampled_free_energy = 0.0;
  std::size_t samples = 0;
};

/// Free energy of the equilibrium state and the maximum over random Markov measures.
VariationalReport variational_principle_check(const Sft& sft, const Potential& potential,
                                              std::size_t samples, std::uint64_t seed);

}  // namespace mfspec
