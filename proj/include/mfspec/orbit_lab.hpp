#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfspec/potential.hpp"
#include "mfspec/sft.hpp"
#include "mfspec/transfer.hpp"

namespace mfspec {

/// Seedable, splittable generator: mt19937_64 seeded through splitmix64.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64+splitmix64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}
  /// Independent stream for item `index` of a run seeded with `seed`.
  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed ^ mix(index + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }
  /// Uniform in [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct OrbitSample {
  Word symbols;
  std::uint64_t seed = 0;
  std::string source;
};

/// Path of `length` symbols drawn from the stationary chain.
OrbitSample sample_orbit(const MarkovMeasure& measure, std::size_t length, std::uint64_t seed,
                         std::string source = "markov");

/// sum g / (-sum jac) over the first n shifts, i.e. -S_n g / S_n jac.
double birkhoff_ratio(const PotentialFamily& family, std::span<const Symbol> symbols, std::size_t n);

/// Smallest m with prod_{k<m} |Jac|^{-1} > r >= prod_{k<=m} |Jac|^{-1}.
std::size_t stopping_time(const Potential& jac, std::span<const Symbol> symbols, double r);
std::size_t stopping_time(const PotentialFamily& family, std::span<const Symbol> symbols, double r);

struct ConcentrationReport {
  double fraction = 0.0;
  double alpha = 0.0;
  double mean_ratio = 0.0;
  double stddev_ratio = 0.0;
  std::size_t n = 0;
  std::size_t samples = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

/// Fraction of nu_q-typical orbits whose length-n Birkhoff ratio is within
/// epsilon of alpha(q).
ConcentrationReport level_set_concentration(const PotentialFamily& family, double q, std::size_t n,
                                            std::size_t sample_count, double epsilon, std::uint64_t seed);

/// Alternating block lengths L1, M1, L2, M2, ...
class BlockSchedule {
 public:
  /// Validates that every length is at least growth_factor times the sum of
  /// the previous ones, with growth_factor >= 2.
  BlockSchedule(std::vector<std::size_t> lengths, double growth_factor);
  /// Minimal schedule: first block `first`, then each block equal to
  /// ceil(growth_factor * total so far), until the total reaches `horizon`.
  static BlockSchedule geometric(double growth_factor, std::size_t horizon, std::size_t first = 1);

  const std::vector<std::size_t>& lengths() const { return lengths_; }
  double growth_factor() const { return growth_factor_; }

 private:
  std::vector<std::size_t> lengths_;
  double growth_factor_;
};

struct OscillationRecord {
  double ratio_a = 0.0;
  double ratio_b = 0.0;
  std::vector<std::pair<std::size_t, double>> boundaries;  // (position, running ratio)
  double tail_min = 0.0;
  double tail_max = 0.0;
  double spread = 0.0;
  double threshold = 0.0;  // 0.8 |ratio_a - ratio_b|
  bool certified = false;
  bool admissible = false;
  std::size_t horizon = 0;
  std::size_t connector_symbols = 0;
};

/// Concatenates blocks cut from the two periodic orbits, joined by connector
/// words, up to `horizon` symbols. The tail is the second half of the block
/// boundaries (the horizon counts as the last boundary).
OscillationRecord irregular_point(const PotentialFamily& family, const Word& orbit_a, const Word& orbit_b,
                                  const BlockSchedule& schedule, std::size_t horizon);

/// target · u · tail, with u the connector from the target's last symbol to the tail.
Word dense_splice(const Sft& sft, const Word& target, const OrbitSample& tail);

struct EmpiricalGibbs {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool inside = false;
};

/// Gibbs ratios nu[w_0..w_{n-1}] / exp(S_n phi) along sampled orbits, compared
/// with the eigendata constants of `potential`.
EmpiricalGibbs empirical_gibbs_check(const MarkovMeasure& measure, const Potential& potential,
                                     std::size_t samples, std::size_t depth, std::uint64_t seed);

}  // namespace mfspec
