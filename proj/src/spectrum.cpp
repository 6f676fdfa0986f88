#include "mfspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mfspec/errors.hpp"
#include "mfspec/transfer.hpp"

namespace mfspec {

namespace {

struct Edge {
  std::size_t from;
  std::size_t to;
  double num;
  double den;
};

std::vector<Edge> state_graph_edges(const Potential& num, const Potential& den, std::size_t& states) {
  const Sft& sft = num.sft();
  const std::size_t s = state_length(num.depth());
  const auto words = cylinders(sft, s);
  const CylinderIndex index(sft, words);
  states = words.size();
  std::vector<Edge> edges;
  Word edge(s + 1);
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::copy(words[i].begin(), words[i].end(), edge.begin());
    for (std::size_t b = 0; b < sft.alphabet_size(); ++b) {
      if (!sft.allowed(words[i].back(), static_cast<Symbol>(b))) continue;
      edge[s] = static_cast<Symbol>(b);
      edges.push_back({i, index.find(edge.data() + 1), num.at(edge.data()), den.at(edge.data())});
    }
  }
  return edges;
}

// Bellman-Ford from a virtual source: is there a cycle with sum(num - r den) < 0?
bool has_negative_cycle(const std::vector<Edge>& edges, std::size_t states, double r) {
  std::vector<double> dist(states, 0.0);
  for (std::size_t round = 0; round <= states; ++round) {
    bool changed = false;
    for (const Edge& e : edges) {
      const double cand = dist[e.from] + (e.num - r * e.den);
      if (cand < dist[e.to] - 1e-15 * (std::abs(dist[e.to]) + 1.0)) {
        dist[e.to] = cand;
        changed = true;
      }
    }
    if (!changed) return false;
  }
  return true;
}

double min_cycle_ratio(const std::vector<Edge>& edges, std::size_t states) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Edge& e : edges) {
    lo = std::min(lo, e.num / e.den);
    hi = std::max(hi, e.num / e.den);
  }
  // Invariant: no negative cycle at lo, a negative cycle just above hi.
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (has_negative_cycle(edges, states, mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Word cyclic_stream(const Word& orbit, std::size_t length) {
  Word out(length);
  for (std::size_t k = 0; k < length; ++k) out[k] = orbit[k % orbit.size()];
  return out;
}

// Root of the strictly increasing F by expanding bracket and Illinois false position.
template <typename F>
double increasing_root(F&& f, double tolerance) {
  double a = 0.0;
  double fa = f(a);
  if (std::abs(fa) <= tolerance) return a;
  double step = fa < 0.0 ? 1.0 : -1.0;
  double b = a + step;
  double fb = f(b);
  while ((fa < 0.0) == (fb < 0.0)) {
    a = b;
    fa = fb;
    step *= 2.0;
    if (std::abs(step) > 1e6) throw InfeasibleConstraint("constraint root could not be bracketed");
    b = a + step;
    fb = f(b);
  }
  int side = 0;
  for (int it = 0; it < 300; ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = f(c);
    if (std::abs(fc) <= tolerance || std::abs(b - a) < 1e-14 * std::max(1.0, std::abs(c))) return c;
    if ((fc < 0.0) == (fb < 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa /= 2.0;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb /= 2.0;
      side = 1;
    }
  }
  return (a * fb - b * fa) / (fb - fa);
}

ConditionalReport conditional_sample(const PotentialFamily& family, const Potential& base, double level,
                                     double bound, std::size_t sample_count, std::uint64_t seed) {
  const Potential minus_g = family.g().scaled(-1.0);
  const RatioRange range = cycle_ratio_range(minus_g, family.jac());
  const double tol = 1e-12;
  if (level < range.min - tol || level > range.max + tol) {
    throw InfeasibleConstraint("level " + std::to_string(level) + " outside achievable range [" +
                               std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
  }
  ConditionalReport rep;
  rep.alpha = level;
  rep.bound = bound;
  rep.seed = seed;
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  rep.max_violation = -std::numeric_limits<double>::infinity();

  const bool degenerate = range.max - range.min <= tol;
  if (!degenerate && (level <= range.min + 1e-9 || level >= range.max - 1e-9)) {
    // Boundary levels carry only measures on extremal cycles. Treated as zero entropy,
    // which holds when those cycles are isolated (single periodic orbits).
    rep.max_ratio = 0.0;
    rep.max_violation = -bound;
    return rep;
  }

  const Sft& sft = family.sft();
  const std::size_t depth = state_length(family.depth()) + 1;
  const Potential constraint = refine(minus_g.combine(1.0, family.jac(), -level), depth);
  const Potential jac = refine(family.jac(), depth);
  const Potential g = refine(family.g(), depth);
  const Potential start = refine(base, depth);
  const double scale = std::max(1.0, constraint.max_value() - constraint.min_value());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < sample_count; ++k) {
    // The first sample is the untilted base measure.
    const double sigma = k == 0 ? 0.0 : 3.0 * unit(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> values(start.values().begin(), start.values().end());
    for (double& x : values) x += sigma * normal(rng);
    const Potential tilted = start.with_values(std::move(values));

    auto measure_at = [&](double s) {
      return equilibrium_state(sft, tilted.combine(1.0, constraint, s));
    };
    double s = 0.0;
    if (!degenerate) {
      s = increasing_root([&](double x) { return integrate(measure_at(x), constraint); },
                          1e-14 * scale);
    }
    const MarkovMeasure rho = measure_at(s);
    const double lyap = integrate(rho, jac);
    const double ratio = entropy(rho) / lyap;
    const double level_err = std::abs(-integrate(rho, g) / lyap - level);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    rep.max_violation = std::max(rep.max_violation, ratio - bound);
    rep.max_constraint_error = std::max(rep.max_constraint_error, level_err);
    ++rep.samples;
  }
  return rep;
}

}  // namespace

SpectrumPoint spectrum_point(const TemperatureCurve& curve, std::size_t index) {
  if (index >= curve.size()) throw InvalidArgument("spectrum_point: index outside the grid");
  SpectrumPoint p;
  p.q = curve.q[index];
  p.alpha = curve.alpha[index];
  p.S = curve.T[index] + p.q * p.alpha;
  p.S_vd = curve.vd_of_nu_q[index];
  return p;
}

std::vector<SpectrumPoint> spectrum_points(const TemperatureCurve& curve) {
  std::vector<SpectrumPoint> out;
  for (std::size_t i = 0; i < curve.size(); ++i) out.push_back(spectrum_point(curve, i));
  return out;
}

LegendreResiduals legendre_check(const TemperatureCurve& curve) {
  const auto pts = spectrum_points(curve);
  if (pts.size() < 3) throw InvalidArgument("legendre_check needs at least three grid points");
  const auto [amin, amax] = std::minmax_element(curve.alpha.begin(), curve.alpha.end());
  if (*amax - *amin <= 1e-9) throw DegenerateSpectrum("alpha is constant: single-point spectrum");

  LegendreResiduals r;
  for (const auto& p : pts) r.identity = std::max(r.identity, std::abs(p.S_vd - p.S));
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double slope = (pts[i + 1].S - pts[i - 1].S) / (pts[i + 1].alpha - pts[i - 1].alpha);
    r.slope = std::max(r.slope, std::abs(slope - pts[i].q));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::max(best, p.S - pts[i].q * p.alpha);
    r.transform = std::max(r.transform, std::abs(curve.T[i] - best));
  }
  auto sorted = pts;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
  r.max_concavity = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < sorted.size(); ++i) {
    const auto& a = sorted[i - 1];
    const auto& b = sorted[i];
    const auto& c = sorted[i + 1];
    const double dd = 2.0 * ((c.S - b.S) / (c.alpha - b.alpha) - (b.S - a.S) / (b.alpha - a.alpha)) /
                      (c.alpha - a.alpha);
    r.max_concavity = std::max(r.max_concavity, dd);
  }
  return r;
}

RatioRange cycle_ratio_range(const Potential& num, const Potential& den) {
  if (den.min_value() <= 0.0) throw InvalidArgument("cycle_ratio_range: denominator must be positive");
  std::size_t states = 0;
  auto edges = state_graph_edges(num, den, states);
  RatioRange out;
  out.min = min_cycle_ratio(edges, states);
  for (Edge& e : edges) e.num = -e.num;
  out.max = -min_cycle_ratio(edges, states);
  return out;
}

double periodic_ratio(const PotentialFamily& family, const Word& orbit) {
  const std::size_t n = orbit.size();
  const Word stream = cyclic_stream(orbit, n + family.depth() - 1);
  return -birkhoff_sum(family.g(), stream, n) / birkhoff_sum(family.jac(), stream, n);
}

Endpoints endpoints(const PotentialFamily& family, std::size_t max_period, double q_probe) {
  Endpoints e;
  e.max_period = max_period;
  e.q_probe = q_probe;
  e.periodic_alpha1 = std::numeric_limits<double>::infinity();
  e.periodic_alpha2 = -std::numeric_limits<double>::infinity();
  for (const auto& orbit : periodic_orbits(family.sft(), max_period)) {
    const double r = periodic_ratio(family, orbit.word);
    if (r < e.periodic_alpha1) {
      e.periodic_alpha1 = r;
      e.periodic_argmin = orbit.word;
    }
    if (r > e.periodic_alpha2) {
      e.periodic_alpha2 = r;
      e.periodic_argmax = orbit.word;
    }
    ++e.orbits_scanned;
  }
  e.probe_alpha1 = alpha(family, q_probe);
  e.probe_alpha2 = alpha(family, -q_probe);
  const RatioRange range = cycle_ratio_range(family.g().scaled(-1.0), family.jac());
  e.cycle_alpha1 = range.min;
  e.cycle_alpha2 = range.max;
  e.spread = std::max(std::abs(e.periodic_alpha1 - e.probe_alpha1), std::abs(e.periodic_alpha2 - e.probe_alpha2));
  return e;
}

VariationalTReport variational_T_check(const PotentialFamily& family, double q, std::size_t max_period) {
  VariationalTReport rep;
  rep.q = q;
  rep.T = solve_T(family, q);
  rep.periodic_inf = std::numeric_limits<double>::infinity();
  for (const auto& orbit : periodic_orbits(family.sft(), max_period)) {
    const std::size_t n = orbit.period();
    const Word stream = cyclic_stream(orbit.word, n + family.depth() - 1);
    // Periodic measures have zero entropy.
    const double value = q * birkhoff_sum(family.g(), stream, n) / -birkhoff_sum(family.jac(), stream, n);
    rep.periodic_inf = std::min(rep.periodic_inf, value);
    ++rep.orbits_scanned;
  }
  rep.gap = rep.periodic_inf + rep.T;
  const MarkovMeasure nu = equilibrium_state(family.sft(), family_phi(family, q, rep.T));
  const double at_nu = (entropy(nu) + q * integrate(nu, family.g())) / -integrate(nu, family.jac());
  rep.equality_residual = std::abs(at_nu + rep.T);
  return rep;
}

ConditionalReport conditional_variational_check(const PotentialFamily& family, double q,
                                                std::size_t sample_count, std::uint64_t seed) {
  const double t = solve_T(family, q);
  const Potential phi = family_phi(family, q, t);
  const MarkovMeasure nu = equilibrium_state(family.sft(), phi);
  const double lyap = integrate(nu, family.jac());
  const double a = -integrate(nu, family.g()) / lyap;
  const double bound = t + q * a;
  ConditionalReport rep = conditional_sample(family, phi, a, bound, sample_count, seed);
  rep.q = q;
  rep.equality_residual = std::abs(entropy(nu) / lyap - bound);
  return rep;
}

ConditionalReport conditional_variational_at(const PotentialFamily& family, double level, double bound,
                                             std::size_t sample_count, std::uint64_t seed) {
  const Potential zero = Potential::constant(family.sft(), family.depth(), 0.0);
  ConditionalReport rep = conditional_sample(family, zero, level, bound, sample_count, seed);
  rep.q = std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace mfspec
