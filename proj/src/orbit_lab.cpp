#include "mfspec/orbit_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfspec/errors.hpp"
#include "mfspec/spectrum.hpp"
#include "mfspec/temperature.hpp"

namespace mfspec {

namespace {

std::size_t draw(std::span<const double> cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

OrbitSample sample_orbit(const MarkovMeasure& measure, std::size_t length, std::uint64_t seed,
                         std::string source) {
  if (length == 0) throw InvalidArgument("sample_orbit: length must be positive");
  const auto n = static_cast<std::size_t>(measure.stochastic().rows());
  const std::size_t s = measure.state_length();
  std::vector<double> start(n);
  std::vector<std::vector<double>> rows(n, std::vector<double>(n));
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += measure.stationary()[static_cast<Eigen::Index>(i)];
    start[i] = acc;
    double racc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      racc += measure.stochastic()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      rows[i][j] = racc;
    }
  }
  Rng rng(seed);
  OrbitSample out;
  out.seed = seed;
  out.source = std::move(source);
  out.symbols.reserve(std::max(length, s));
  std::size_t state = draw(start, rng.uniform() * acc);
  const Word& first = measure.states()[state];
  out.symbols.assign(first.begin(), first.end());
  while (out.symbols.size() < length) {
    state = draw(rows[state], rng.uniform() * rows[state].back());
    out.symbols.push_back(measure.states()[state].back());
  }
  out.symbols.resize(length);
  return out;
}

double birkhoff_ratio(const PotentialFamily& family, std::span<const Symbol> symbols, std::size_t n) {
  if (n == 0) throw InvalidArgument("birkhoff_ratio: n must be positive");
  return -birkhoff_sum(family.g(), symbols, n) / birkhoff_sum(family.jac(), symbols, n);
}

std::size_t stopping_time(const Potential& jac, std::span<const Symbol> symbols, double r) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("stopping_time: r must lie in (0, 1)");
  const std::size_t depth = jac.depth();
  double product = 1.0;
  for (std::size_t m = 0;; ++m) {
    if (symbols.size() < m + depth) throw StreamExhausted("stopping_time: stream exhausted");
    const double next = product * std::exp(-jac.at(symbols.data() + m));
    if (next <= r) return m;
    product = next;
  }
}

std::size_t stopping_time(const PotentialFamily& family, std::span<const Symbol> symbols, double r) {
  return stopping_time(family.jac(), symbols, r);
}

ConcentrationReport level_set_concentration(const PotentialFamily& family, double q, std::size_t n,
                                            std::size_t sample_count, double epsilon, std::uint64_t seed) {
  if (n == 0 || sample_count == 0) throw InvalidArgument("level_set_concentration: n and N must be positive");
  if (!(epsilon > 0.0)) throw InvalidArgument("level_set_concentration: epsilon must be positive");
  const MarkovMeasure nu = nu_q(family, q);
  ConcentrationReport rep;
  rep.alpha = -integrate(nu, family.g()) / integrate(nu, family.jac());
  rep.n = n;
  rep.samples = sample_count;
  rep.epsilon = epsilon;
  rep.seed = seed;
  std::size_t hits = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const std::uint64_t orbit_seed = Rng::derive(seed, i).seed();
    const OrbitSample orbit = sample_orbit(nu, n + family.depth() - 1, orbit_seed, "nu_q");
    const double ratio = birkhoff_ratio(family, orbit.symbols, n);
    if (std::abs(ratio - rep.alpha) <= epsilon) ++hits;
    sum += ratio;
    sum_sq += ratio * ratio;
  }
  const auto count = static_cast<double>(sample_count);
  rep.fraction = static_cast<double>(hits) / count;
  rep.mean_ratio = sum / count;
  rep.stddev_ratio = std::sqrt(std::max(0.0, sum_sq / count - rep.mean_ratio * rep.mean_ratio));
  return rep;
}

BlockSchedule::BlockSchedule(std::vector<std::size_t> lengths, double growth_factor)
    : lengths_(std::move(lengths)), growth_factor_(growth_factor) {
  if (!(growth_factor_ >= 2.0)) throw InvalidArgument("block schedule growth factor must be >= 2");
  double total = 0.0;
  for (std::size_t i = 0; i < lengths_.size(); ++i) {
    const auto len = static_cast<double>(lengths_[i]);
    if (lengths_[i] == 0) throw InvalidArgument("block lengths must be positive");
    if (i > 0 && len < growth_factor_ * total) {
      throw InvalidArgument("block " + std::to_string(i) + " is shorter than growth_factor x prefix");
    }
    total += len;
  }
}

BlockSchedule BlockSchedule::geometric(double growth_factor, std::size_t horizon, std::size_t first) {
  std::vector<std::size_t> lengths{first};
  std::size_t total = first;
  while (total < horizon) {
    const auto next = static_cast<std::size_t>(std::ceil(growth_factor * static_cast<double>(total)));
    lengths.push_back(next);
    total += next;
  }
  return BlockSchedule(std::move(lengths), growth_factor);
}

OscillationRecord irregular_point(const PotentialFamily& family, const Word& orbit_a, const Word& orbit_b,
                                  const BlockSchedule& schedule, std::size_t horizon) {
  const Sft& sft = family.sft();
  if (!sft.cyclically_admissible(orbit_a) || !sft.cyclically_admissible(orbit_b)) {
    throw InadmissibleWord("irregular_point: orbits must be cyclically admissible words");
  }
  OscillationRecord rec;
  rec.ratio_a = periodic_ratio(family, orbit_a);
  rec.ratio_b = periodic_ratio(family, orbit_b);
  if (std::abs(rec.ratio_a - rec.ratio_b) < 1e-12) {
    throw EqualRatios("the two periodic orbits have equal Birkhoff ratios");
  }
  rec.horizon = horizon;
  rec.threshold = 0.8 * std::abs(rec.ratio_a - rec.ratio_b);

  const std::size_t depth = family.depth();
  const std::size_t needed = horizon + depth - 1;
  Word word;
  word.reserve(needed);
  std::vector<std::size_t> ends;
  const auto& lengths = schedule.lengths();
  for (std::size_t k = 0; word.size() < needed; ++k) {
    const Word& orbit = k % 2 == 0 ? orbit_a : orbit_b;
    // Past the schedule the last block simply continues.
    const std::size_t len = k < lengths.size() ? lengths[k] : needed;
    if (!word.empty()) {
      const Word u = connector(sft, word.back(), orbit.front());
      rec.connector_symbols += u.size();
      word.insert(word.end(), u.begin(), u.end());
    }
    for (std::size_t i = 0; i < len && word.size() < needed; ++i) word.push_back(orbit[i % orbit.size()]);
    if (word.size() < horizon) ends.push_back(word.size());
  }
  word.resize(needed);
  ends.push_back(horizon);
  rec.admissible = sft.admissible(word);

  double sum_g = 0.0;
  double sum_jac = 0.0;
  std::size_t pos = 0;
  for (std::size_t end : ends) {
    for (; pos < end; ++pos) {
      sum_g += family.g().at(word.data() + pos);
      sum_jac += family.jac().at(word.data() + pos);
    }
    rec.boundaries.emplace_back(end, -sum_g / sum_jac);
  }
  rec.tail_min = std::numeric_limits<double>::infinity();
  rec.tail_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = rec.boundaries.size() / 2; i < rec.boundaries.size(); ++i) {
    rec.tail_min = std::min(rec.tail_min, rec.boundaries[i].second);
    rec.tail_max = std::max(rec.tail_max, rec.boundaries[i].second);
  }
  rec.spread = rec.tail_max - rec.tail_min;
  rec.certified = rec.admissible && rec.spread >= rec.threshold;
  return rec;
}

Word dense_splice(const Sft& sft, const Word& target, const OrbitSample& tail) {
  if (target.empty() || !sft.admissible(target)) throw InadmissibleWord("dense_splice: target is not admissible");
  if (tail.symbols.empty()) throw InvalidArgument("dense_splice: empty tail");
  Word out = target;
  const Word u = connector(sft, target.back(), tail.symbols.front());
  out.insert(out.end(), u.begin(), u.end());
  out.insert(out.end(), tail.symbols.begin(), tail.symbols.end());
  if (!sft.admissible(out)) throw InadmissibleWord("dense_splice: spliced word is not admissible");
  return out;
}

EmpiricalGibbs empirical_gibbs_check(const MarkovMeasure& measure, const Potential& potential,
                                     std::size_t samples, std::size_t depth, std::uint64_t seed) {
  EmpiricalGibbs out;
  std::tie(out.c1, out.c2) = gibbs_bounds(measure.sft(), potential);
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = 0.0;
  const std::size_t n = std::max(depth, measure.state_length());
  for (std::size_t i = 0; i < samples; ++i) {
    const OrbitSample orbit = sample_orbit(measure, n + potential.depth() - 1, Rng::derive(seed, i).seed());
    const Word prefix(orbit.symbols.begin(), orbit.symbols.begin() + static_cast<std::ptrdiff_t>(n));
    const double ratio = cylinder_measure(measure, prefix) / std::exp(birkhoff_sum(potential, orbit.symbols, n));
    out.min_ratio = std::min(out.min_ratio, ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  const double slack = 1e-9;
  out.inside = out.min_ratio >= out.c1 * (1.0 - slack) && out.max_ratio <= out.c2 * (1.0 + slack);
  return out;
}

}  // namespace mfspec
