#include "mfspec/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>

#include "mfspec/errors.hpp"

namespace mfspec {

namespace {

int pattern_period(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  std::vector<long> level(static_cast<std::size_t>(n), -1);
  level[0] = 0;
  std::deque<Eigen::Index> queue{0};
  while (!queue.empty()) {
    const Eigen::Index u = queue.front();
    queue.pop_front();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (m(u, v) > 0.0 && level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  long g = 0;
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (m(u, v) > 0.0 && level[u] >= 0 && level[v] >= 0) {
        g = std::gcd(g, std::labs(level[u] + 1 - level[v]));
      }
    }
  }
  return static_cast<int>(g);
}

struct PowerResult {
  Eigen::VectorXd vector;
  long iterations;
};

// Noda's inverse iteration: shift by the Collatz-Wielandt upper bound, which stays
// above the Perron root, so (sigma - b)^-1 is positive and x stays positive.
// Converges when another eigenvalue is close to the Perron root in modulus.
std::optional<Eigen::VectorXd> noda_iterate(const Eigen::MatrixXd& b, Eigen::VectorXd x, double tolerance) {
  const Eigen::Index n = b.rows();
  for (int k = 0; k < 200; ++k) {
    const Eigen::ArrayXd ratio = (b * x).array() / x.array();
    const double hi = ratio.maxCoeff();
    if (hi - ratio.minCoeff() <= tolerance * hi) return x;
    const Eigen::MatrixXd shifted = hi * Eigen::MatrixXd::Identity(n, n) - b;
    const Eigen::VectorXd y = shifted.partialPivLu().solve(x);
    if (!y.allFinite() || (y.array() <= 0.0).any()) return std::nullopt;
    x = y / y.maxCoeff();
  }
  return std::nullopt;
}

// Power iteration on `b` (already shifted); returns a vector with max entry 1.
PowerResult power_iterate(const Eigen::MatrixXd& b, const PerronOptions& options) {
  constexpr long kNodaSwitch = 5000;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(b.rows());
  Eigen::VectorXd best = x;
  double best_residual = std::numeric_limits<double>::infinity();
  long best_at = 0;
  long it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::VectorXd y = b * x;
    const double lambda = y.sum() / x.sum();
    const double residual = (y - lambda * x).lpNorm<Eigen::Infinity>() / (lambda * x.lpNorm<Eigen::Infinity>());
    if (residual < best_residual) {
      best_residual = residual;
      best = x;
      best_at = it;
    }
    if (residual <= options.tolerance) return {x, it};
    // Rounding floor reached: accept once nothing has improved for a while.
    if (best_residual <= 1e-12 && it - best_at > 2000) return {best, it};
    if (it == kNodaSwitch && (best.array() > 0.0).all()) {
      if (auto v = noda_iterate(b, best, options.tolerance)) return {*v, it};
    }
    x = y / y.maxCoeff();
  }
  if (best_residual <= 1e-12) return {best, it};
  throw ConvergenceFailure(it, best_residual);
}

// Sum of the potential over the first `windows` starting positions of `word`.
double window_sum(const Potential& potential, const Word& word, std::size_t windows) {
  double s = 0.0;
  for (std::size_t k = 0; k < windows; ++k) s += potential.at(word.data() + k);
  return s;
}

void require_zero_pressure(const Sft& sft, const Potential& potential) {
  const double p = pressure(sft, potential);
  if (std::abs(p) > kZeroPressureTolerance) throw NotZeroPressure(p);
}

std::pair<double, double> gibbs_constants(const Sft& sft, const Potential& potential,
                                          const PerronData& pd) {
  const std::size_t m = potential.depth();
  const std::size_t s = state_length(m);
  const CylinderIndex index(sft, pd.states);
  double tail_lo = std::numeric_limits<double>::infinity();
  double tail_hi = 0.0;
  for (const auto& x : cylinders(sft, s + m - 1)) {
    const double tail = pd.right[static_cast<Eigen::Index>(index.find(x.data()))] *
                        std::exp(-window_sum(potential, x, s));
    tail_lo = std::min(tail_lo, tail);
    tail_hi = std::max(tail_hi, tail);
  }
  return {pd.left.minCoeff() * tail_lo, pd.left.maxCoeff() * tail_hi};
}

}  // namespace

std::pair<double, double> gibbs_bounds(const Sft& sft, const Potential& potential) {
  require_zero_pressure(sft, potential);
  return gibbs_constants(sft, potential, perron(weighted_matrix(sft, potential)));
}

std::size_t state_length(std::size_t potential_depth) {
  return potential_depth <= 1 ? 1 : potential_depth - 1;
}

WeightedMatrix weighted_matrix(const Sft& sft, const Potential& potential) {
  const std::size_t s = state_length(potential.depth());
  WeightedMatrix out;
  out.states = cylinders(sft, s);
  const CylinderIndex index(sft, out.states);
  const auto n = static_cast<Eigen::Index>(out.states.size());
  out.matrix = Eigen::MatrixXd::Zero(n, n);
  Word edge(s + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Word& state = out.states[static_cast<std::size_t>(i)];
    std::copy(state.begin(), state.end(), edge.begin());
    for (std::size_t b = 0; b < sft.alphabet_size(); ++b) {
      if (!sft.allowed(state.back(), static_cast<Symbol>(b))) continue;
      edge[s] = static_cast<Symbol>(b);
      const auto j = static_cast<Eigen::Index>(index.find(edge.data() + 1));
      out.matrix(i, j) = std::exp(potential.at(edge.data()));
    }
  }
  return out;
}

PerronData perron(const Eigen::MatrixXd& matrix, const PerronOptions& options) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw InvalidArgument("perron: matrix must be square and nonempty");
  }
  if ((matrix.array() < 0.0).any()) throw InvalidArgument("perron: matrix must be nonnegative");
  const double shift = pattern_period(matrix) > 1 ? matrix.rowwise().sum().maxCoeff() : 0.0;
  const Eigen::MatrixXd b = matrix + shift * Eigen::MatrixXd::Identity(matrix.rows(), matrix.cols());

  const PowerResult right = power_iterate(b, options);
  const Eigen::MatrixXd bt = b.transpose();
  const PowerResult left = power_iterate(bt, options);

  PerronData out;
  out.right = right.vector / right.vector.maxCoeff();
  out.left = left.vector / left.vector.dot(out.right);
  out.lambda = out.left.dot(matrix * out.right) / out.left.dot(out.right);
  out.iterations = std::max(right.iterations, left.iterations);
  const double r_right = (matrix * out.right - out.lambda * out.right).lpNorm<Eigen::Infinity>() /
                         (out.lambda * out.right.lpNorm<Eigen::Infinity>());
  const Eigen::VectorXd lt = matrix.transpose() * out.left;
  const double r_left = (lt - out.lambda * out.left).lpNorm<Eigen::Infinity>() /
                        (out.lambda * out.left.lpNorm<Eigen::Infinity>());
  out.residual = std::max(r_right, r_left);
  return out;
}

PerronData perron(const WeightedMatrix& weighted, const PerronOptions& options) {
  PerronData out = perron(weighted.matrix, options);
  out.states = weighted.states;
  return out;
}

double pressure(const Sft& sft, const Potential& potential) {
  // P(phi - c) = P(phi) - c keeps the matrix entries in [0, 1].
  const double c = potential.max_value();
  const PerronData pd = perron(weighted_matrix(sft, potential.shifted(-c)));
  return std::log(pd.lambda) + c;
}

MarkovMeasure::MarkovMeasure(Sft sft, std::size_t state_length, std::vector<Word> states,
                             Eigen::MatrixXd stochastic, Eigen::RowVectorXd stationary)
    : sft_(std::move(sft)),
      state_length_(state_length),
      states_(std::move(states)),
      stochastic_(std::move(stochastic)),
      stationary_(std::move(stationary)),
      index_(sft_, states_) {}

MarkovMeasure MarkovMeasure::from_parts(const Sft& sft, std::size_t state_length,
                                        Eigen::MatrixXd stochastic, Eigen::RowVectorXd stationary) {
  auto states = cylinders(sft, state_length);
  const auto n = static_cast<Eigen::Index>(states.size());
  if (stochastic.rows() != n || stochastic.cols() != n || stationary.size() != n) {
    throw InvalidArgument("Markov measure dimensions do not match the state space");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Word& a = states[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (stochastic(i, j) == 0.0) continue;
      const Word& b = states[static_cast<std::size_t>(j)];
      const bool follows = std::equal(a.begin() + 1, a.end(), b.begin()) && sft.allowed(a.back(), b.back());
      if (!follows) {
        throw InvalidArgument("stochastic matrix charges the forbidden transition " + word_to_string(a) +
                              " -> " + word_to_string(b));
      }
    }
  }
  return MarkovMeasure(sft, state_length, std::move(states), std::move(stochastic),
                       std::move(stationary));
}

MarkovMeasure MarkovMeasure::from_stochastic(const Sft& sft, std::size_t state_length,
                                             Eigen::MatrixXd stochastic) {
  const Eigen::Index n = stochastic.rows();
  if ((stochastic.array() < 0.0).any()) throw InvalidArgument("stochastic matrix has negative entries");
  if (((stochastic.rowwise().sum().array() - 1.0).abs() > 1e-12).any()) {
    throw InvalidArgument("stochastic matrix rows must sum to 1");
  }
  // pi (I - P + E) = 1^T with E the all-ones matrix.
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::Identity(n, n) - stochastic + Eigen::MatrixXd::Ones(n, n);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a.transpose());
  if (lu.rcond() < 1e-14) throw SingularSystem("stationary distribution is not unique");
  Eigen::RowVectorXd pi = lu.solve(Eigen::VectorXd::Ones(n)).transpose();
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return from_parts(sft, state_length, std::move(stochastic), std::move(pi));
}

MarkovMeasure equilibrium_state(const Sft& sft, const Potential& potential) {
  const WeightedMatrix wm = weighted_matrix(sft, potential.shifted(-potential.max_value()));
  const PerronData pd = perron(wm);
  const auto n = static_cast<Eigen::Index>(wm.states.size());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      p(i, j) = wm.matrix(i, j) * pd.right[j] / (pd.lambda * pd.right[i]);
    }
    p.row(i) /= p.row(i).sum();
  }
  Eigen::RowVectorXd pi = pd.left.cwiseProduct(pd.right).transpose();
  pi /= pi.sum();
  return MarkovMeasure::from_parts(sft, state_length(potential.depth()), std::move(p), std::move(pi));
}

double cylinder_measure(const MarkovMeasure& measure, const Word& word) {
  if (!measure.sft().admissible(word)) return 0.0;
  const std::size_t s = measure.state_length();
  if (word.size() < s) {
    double total = 0.0;
    for (std::size_t i = 0; i < measure.states().size(); ++i) {
      const Word& st = measure.states()[i];
      if (std::equal(word.begin(), word.end(), st.begin())) {
        total += measure.stationary()[static_cast<Eigen::Index>(i)];
      }
    }
    return total;
  }
  auto i = static_cast<Eigen::Index>(measure.state_index(word.data()));
  double mass = measure.stationary()[i];
  for (std::size_t k = 1; k + s <= word.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(measure.state_index(word.data() + k));
    mass *= measure.stochastic()(i, j);
    i = j;
  }
  return mass;
}

double entropy(const MarkovMeasure& measure) {
  const auto& p = measure.stochastic();
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0.0) row -= p(i, j) * std::log(p(i, j));
    }
    h += measure.stationary()[i] * row;
  }
  return std::max(h, 0.0);
}

double integrate(const MarkovMeasure& measure, const Potential& potential) {
  const std::size_t s = measure.state_length();
  if (potential.depth() <= s) {
    double total = 0.0;
    for (std::size_t i = 0; i < measure.states().size(); ++i) {
      total += measure.stationary()[static_cast<Eigen::Index>(i)] *
               potential.at(measure.states()[i].data());
    }
    return total;
  }
  double total = 0.0;
  const auto& words = potential.words();
  for (std::size_t i = 0; i < words.size(); ++i) {
    total += cylinder_measure(measure, words[i]) * potential.value(i);
  }
  return total;
}

double free_energy(const MarkovMeasure& measure, const Potential& potential) {
  return entropy(measure) + integrate(measure, potential);
}

const char* to_string(VarianceConvention convention) {
  return convention == VarianceConvention::one_sided ? "one_sided" : "symmetric";
}

double asymptotic_variance(const MarkovMeasure& measure, const Potential& h1, const Potential& h2,
                           VarianceConvention convention) {
  const Sft& sft = measure.sft();
  const std::size_t s = measure.state_length();
  const std::size_t len = std::max({s, h1.depth(), h2.depth()});

  // Lift the chain to blocks of length `len` so both functions depend on the current state only.
  std::vector<Word> blocks = len == s ? measure.states() : cylinders(sft, len);
  const CylinderIndex index(sft, blocks);
  const auto n = static_cast<Eigen::Index>(blocks.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::RowVectorXd pi(n);
  Eigen::VectorXd f1(n);
  Eigen::VectorXd f2(n);
  Word next(len + 1);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Word& w = blocks[static_cast<std::size_t>(a)];
    pi[a] = len == s ? measure.stationary()[a] : cylinder_measure(measure, w);
    f1[a] = h1.at(w.data());
    f2[a] = h2.at(w.data());
    std::copy(w.begin(), w.end(), next.begin());
    const auto from = static_cast<Eigen::Index>(measure.state_index(w.data() + (len - s)));
    for (std::size_t c = 0; c < sft.alphabet_size(); ++c) {
      if (!sft.allowed(w.back(), static_cast<Symbol>(c))) continue;
      next[len] = static_cast<Symbol>(c);
      const auto b = static_cast<Eigen::Index>(index.find(next.data() + 1));
      const auto to = static_cast<Eigen::Index>(measure.state_index(next.data() + 1 + (len - s)));
      p(a, b) = measure.stochastic()(from, to);
    }
  }
  const Eigen::VectorXd c1 = f1.array() - pi.dot(f1);
  const Eigen::VectorXd c2 = f2.array() - pi.dot(f2);

  // Fundamental matrix Z = (I - P + 1 pi)^{-1}; sum_k P^k h = Z h for centered h.
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - p + Eigen::VectorXd::Ones(n) * pi;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rcond() < 1e-13) throw SingularSystem("fundamental matrix is numerically singular");
  const Eigen::VectorXd z2 = lu.solve(c2);
  const double one_sided = pi.dot(c1.cwiseProduct(z2));
  if (convention == VarianceConvention::one_sided) return one_sided;
  const Eigen::VectorXd z1 = lu.solve(c1);
  const double reverse = pi.dot(c2.cwiseProduct(z1));
  const double lag0 = pi.dot(c1.cwiseProduct(c2));
  return one_sided + reverse - lag0;
}

GibbsCertificate gibbs_check_measure(const MarkovMeasure& measure, const Potential& potential,
                                     std::size_t max_depth) {
  const Sft& sft = measure.sft();
  require_zero_pressure(sft, potential);
  const PerronData pd = perron(weighted_matrix(sft, potential));
  const auto [c1, c2] = gibbs_constants(sft, potential, pd);

  GibbsCertificate cert;
  cert.c1 = c1;
  cert.c2 = c2;
  cert.worst_ratio_low = std::numeric_limits<double>::infinity();
  cert.worst_ratio_high = 0.0;
  const std::size_t m = potential.depth();
  const double slack = 1e-9;
  bool ok = true;
  // The eigendata bounds hold for words at least one state long.
  for (std::size_t n = state_length(m); n <= max_depth && ok; ++n) {
    for (const auto& ext : cylinders(sft, n + m - 1)) {
      const Word w(ext.begin(), ext.begin() + static_cast<std::ptrdiff_t>(n));
      const double ratio = cylinder_measure(measure, w) / std::exp(window_sum(potential, ext, n));
      cert.worst_ratio_low = std::min(cert.worst_ratio_low, ratio);
      cert.worst_ratio_high = std::max(cert.worst_ratio_high, ratio);
      ++cert.cylinders_checked;
    }
    cert.checked_depth = n;
    ok = cert.worst_ratio_low >= c1 * (1.0 - slack) && cert.worst_ratio_high <= c2 * (1.0 + slack);
  }
  cert.certified = ok;
  return cert;
}

GibbsCertificate gibbs_certificate(const Sft& sft, const Potential& potential, std::size_t max_depth,
                                   bool symmetric_constants) {
  require_zero_pressure(sft, potential);
  GibbsCertificate cert = gibbs_check_measure(equilibrium_state(sft, potential), potential, max_depth);
  if (symmetric_constants) {
    cert.c2 = std::max({cert.c2, 1.0 / cert.c1, 1.0});
    cert.c1 = 1.0 / cert.c2;
    cert.symmetric_constants = true;
  }
  return cert;
}

Eigenmeasure::Eigenmeasure(const Sft& sft, const Potential& potential)
    : sft_(sft),
      potential_(potential),
      perron_(perron(weighted_matrix(sft, potential))),
      index_(sft, perron_.states),
      state_length_(state_length(potential.depth())),
      total_(perron_.right.sum()) {}

double Eigenmeasure::mass(const Word& word) const {
  if (!sft_.admissible(word)) return 0.0;
  const std::size_t s = state_length_;
  const std::size_t n = word.size();
  if (n < s) {
    double total = 0.0;
    for (std::size_t i = 0; i < perron_.states.size(); ++i) {
      if (std::equal(word.begin(), word.end(), perron_.states[i].begin())) {
        total += perron_.right[static_cast<Eigen::Index>(i)];
      }
    }
    return total / total_;
  }
  const double sum = window_sum(potential_, word, n - s);
  const double u_last = perron_.right[static_cast<Eigen::Index>(index_.find(word.data() + (n - s)))];
  return std::exp(sum - static_cast<double>(n - s) * std::log(perron_.lambda)) * u_last / total_;
}

double eigenmeasure_defect(const Sft& sft, const Potential& measure_potential,
                           const Potential& relation_potential, std::size_t max_depth) {
  const Eigenmeasure em(sft, measure_potential);
  double defect = 0.0;
  for (std::size_t len = relation_potential.depth(); len <= max_depth; ++len) {
    for (const auto& w : cylinders(sft, len)) {
      double image = 0.0;
      if (len >= 2) {
        image = em.mass(Word(w.begin() + 1, w.end()));
      } else {
        for (std::size_t b = 0; b < sft.alphabet_size(); ++b) {
          if (sft.allowed(w.front(), static_cast<Symbol>(b))) image += em.mass({static_cast<Symbol>(b)});
        }
      }
      const double weighted = std::exp(-relation_potential.at(w.data())) * em.mass(w);
      defect = std::max(defect, std::abs(image - weighted));
    }
  }
  return defect;
}

double conformality_check(const Sft& sft, const Potential& potential, std::size_t max_depth) {
  require_zero_pressure(sft, potential);
  return eigenmeasure_defect(sft, potential, potential, max_depth);
}

MarkovMeasure random_markov_measure(const Sft& sft, std::size_t state_length, std::mt19937_64& rng) {
  const auto states = cylinders(sft, state_length);
  const CylinderIndex index(sft, states);
  const auto n = static_cast<Eigen::Index>(states.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Sharpness exponent spreads samples between near-uniform and near-deterministic rows.
  const double sharpness = 0.25 + 4.0 * unit(rng);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Word next(state_length + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Word& st = states[static_cast<std::size_t>(i)];
    std::copy(st.begin(), st.end(), next.begin());
    for (std::size_t b = 0; b < sft.alphabet_size(); ++b) {
      if (!sft.allowed(st.back(), static_cast<Symbol>(b))) continue;
      next[state_length] = static_cast<Symbol>(b);
      const auto j = static_cast<Eigen::Index>(index.find(next.data() + 1));
      p(i, j) = std::pow(-std::log(1.0 - unit(rng)), sharpness) + 1e-12;
    }
    p.row(i) /= p.row(i).sum();
  }
  return MarkovMeasure::from_stochastic(sft, state_length, std::move(p));
}

VariationalReport variational_principle_check(const Sft& sft, const Potential& potential,
                                              std::size_t samples, std::uint64_t seed) {
  VariationalReport report;
  report.pressure = pressure(sft, potential);
  report.equilibrium_free_energy = free_energy(equilibrium_state(sft, potential), potential);
  report.max_sampled_free_energy = -std::numeric_limits<double>::infinity();
  report.samples = samples;
  std::mt19937_64 rng(seed);
  const std::size_t s = state_length(potential.depth());
  for (std::size_t k = 0; k < samples; ++k) {
    const MarkovMeasure rho = random_markov_measure(sft, s, rng);
    report.max_sampled_free_energy = std::max(report.max_sampled_free_energy, free_energy(rho, potential));
  }
  return report;
}

}  // namespace mfspec
