// advsp/cramer.hpp
// Empirical distributions, the CDF-mixture critic, and the Cramer IPM
// discrepancy with a subgradient usable inside the attack's inner loop.
//
// Tie convention used throughout: CDFs are right-continuous, F(t) counts
// samples <= t; subgradients at exact ties take the right-limit value
// (sign(0) = 0 in the energy-distance sums).

#ifndef ADVSP_CRAMER_HPP
#define ADVSP_CRAMER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "advsp/rng.hpp"

namespace advsp {

struct EmpiricalDistribution {
  std::vector<double> values;        // sorted ascending
  std::vector<double> weights;       // positive, sum to 1
  std::vector<double> cum_weights;   // prefix sums of weights

  // F(t) = total weight of values <= t (right-continuous).
  double cdf(double t) const {
    const auto it = std::upper_bound(values.begin(), values.end(), t);
    if (it == values.begin()) return 0.0;
    return cum_weights[static_cast<std::size_t>(it - values.begin()) - 1];
  }
};

inline EmpiricalDistribution empirical_cdf(std::vector<double> samples,
                                           std::vector<double> weights = {}) {
  if (samples.empty())
    throw std::invalid_argument("empirical_cdf: empty sample set");
  for (double v : samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("empirical_cdf: non-finite sample");

  EmpiricalDistribution d;
  if (weights.empty()) {
    std::sort(samples.begin(), samples.end());
    d.values = std::move(samples);
    d.weights.assign(d.values.size(), 1.0 / static_cast<double>(d.values.size()));
  } else {
    if (weights.size() != samples.size())
      throw std::invalid_argument("empirical_cdf: weight count mismatch");
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return samples[a] < samples[b]; });
    double wsum = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw std::invalid_argument("empirical_cdf: non-positive weight");
      wsum += w;
    }
    d.values.reserve(samples.size());
    d.weights.reserve(samples.size());
    for (std::size_t i : idx) {
      d.values.push_back(samples[i]);
      d.weights.push_back(weights[i] / wsum);
    }
  }
  d.cum_weights.resize(d.weights.size());
  std::partial_sum(d.weights.begin(), d.weights.end(), d.cum_weights.begin());
  d.cum_weights.back() = 1.0;  // kill prefix-sum drift
  return d;
}

// The empirical critic: f(t) = F_ref(t) + mu * F_cand(t), a bounded
// piecewise-constant CDF mixture.
struct CriticFunction {
  EmpiricalDistribution reference;
  EmpiricalDistribution candidate;
  double mu = 0.0;  // in [-1, 1]
};

inline double critic_eval(const CriticFunction &f, double t) {
  return f.reference.cdf(t) + f.mu * f.candidate.cdf(t);
}

// | E_{x~P}[f_PQ(x)] - E_{x~Q}[f_PQ(x)] |, expectations exact over the
// weighted sample sets.
inline double ipm_discrepancy(const EmpiricalDistribution &reference,
                              const EmpiricalDistribution &candidate,
                              double mu) {
  if (mu < -1.0 || mu > 1.0)
    throw std::invalid_argument("ipm_discrepancy: mu outside [-1, 1]");
  CriticFunction f{reference, candidate, mu};
  double e_p = 0.0, e_q = 0.0;
  for (std::size_t i = 0; i < reference.values.size(); ++i)
    e_p += reference.weights[i] * critic_eval(f, reference.values[i]);
  for (std::size_t j = 0; j < candidate.values.size(); ++j)
    e_q += candidate.weights[j] * critic_eval(f, candidate.values[j]);
  return std::fabs(e_p - e_q);
}

// Exact integral of (F_P - F_Q)^2 over the merged breakpoint partition.
// In 1-D this is the Cramer-2 statistic and equals half the energy distance.
inline double cramer2_distance(const EmpiricalDistribution &p,
                               const EmpiricalDistribution &q) {
  std::size_t i = 0, j = 0;
  double fp = 0.0, fq = 0.0;
  double prev = 0.0;
  bool have_prev = false;
  double total = 0.0;
  while (i < p.values.size() || j < q.values.size()) {
    double t;
    if (j >= q.values.size() || (i < p.values.size() && p.values[i] <= q.values[j]))
      t = p.values[i];
    else
      t = q.values[j];
    if (have_prev && t > prev) {
      const double diff = fp - fq;
      total += diff * diff * (t - prev);
    }
    while (i < p.values.size() && p.values[i] == t) fp = p.cum_weights[i++];
    while (j < q.values.size() && q.values[j] == t) fq = q.cum_weights[j++];
    prev = t;
    have_prev = true;
  }
  return total;
}

enum class CramerDomain { kAmplitude, kLogmel };
enum class CramerMode { kCritic, kCramer2 };

struct CramerConfig {
  CramerDomain domain = CramerDomain::kAmplitude;
  CramerMode mode = CramerMode::kCramer2;
  std::size_t reference_size_cap = 1u << 16;
  std::uint64_t subsample_seed = 0;
};

// Pools sample values across a corpus into one reference distribution,
// reservoir-subsampled with a fixed seed once the cap is hit.
inline EmpiricalDistribution pooled_reference(
    const std::vector<const std::vector<double> *> &sample_sets,
    std::size_t cap, std::uint64_t seed) {
  std::vector<double> pool;
  pool.reserve(cap);
  auto eng = make_engine(mix64(seed ^ 0xCDFull));
  std::size_t seen = 0;
  for (const auto *set : sample_sets) {
    for (double v : *set) {
      ++seen;
      if (pool.size() < cap) {
        pool.push_back(v);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, seen - 1);
        const std::size_t r = pick(eng);
        if (r < cap) pool[r] = v;
      }
    }
  }
  return empirical_cdf(std::move(pool));
}

namespace detail {

// Weight of reference mass strictly below / strictly above t.
inline void mass_around(const EmpiricalDistribution &d, double t,
                        double *below, double *above) {
  const auto lo = std::lower_bound(d.values.begin(), d.values.end(), t);
  const auto hi = std::upper_bound(d.values.begin(), d.values.end(), t);
  const std::size_t il = static_cast<std::size_t>(lo - d.values.begin());
  const std::size_t ih = static_cast<std::size_t>(hi - d.values.begin());
  *below = (il == 0) ? 0.0 : d.cum_weights[il - 1];
  *above = 1.0 - ((ih == 0) ? 0.0 : d.cum_weights[ih - 1]);
}

}  // namespace detail

// Subgradient of the discrepancy with respect to each candidate value, in
// the input (pre-sort) order.
//
// kCramer2: d/dq_j of the energy-distance half-form, via sign-comparison
// sums; equals (1/n) * [sum_i w_i sign(q_j - r_i) - (1/n) sum_k sign(q_j - q_k)].
// kCritic: sign(E_P f - E_Q f) times the derivative of -E_Q[f] with f's
// CDFs piecewise-linearly interpolated between breakpoints (the literal
// step-function objective has zero derivative almost everywhere).
inline std::vector<double> ipm_gradient(const std::vector<double> &candidate_values,
                                        const EmpiricalDistribution &reference,
                                        const CramerConfig &cfg, double mu) {
  const std::size_t n = candidate_values.size();
  if (n == 0) return {};
  for (double v : candidate_values)
    if (!std::isfinite(v))
      throw std::invalid_argument("ipm_gradient: non-finite candidate value");
  EmpiricalDistribution cand = empirical_cdf(candidate_values);
  std::vector<double> grad(n, 0.0);

  if (cfg.mode == CramerMode::kCramer2) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double q = candidate_values[j];
      double ref_below, ref_above, cand_below, cand_above;
      detail::mass_around(reference, q, &ref_below, &ref_above);
      detail::mass_around(cand, q, &cand_below, &cand_above);
      grad[j] = inv_n * ((ref_below - ref_above) - (cand_below - cand_above));
    }
    return grad;
  }

  // Critic mode. Interpolated-CDF slope at q (right limit at exact ties).
  auto slope_at = [](const EmpiricalDistribution &d, double q) {
    const auto hi = std::upper_bound(d.values.begin(), d.values.end(), q);
    if (hi == d.values.end() || hi == d.values.begin()) return 0.0;
    const std::size_t ih = static_cast<std::size_t>(hi - d.values.begin());
    const double v_lo = d.values[ih - 1];
    const double v_hi = d.values[ih];
    if (v_hi <= v_lo) return 0.0;
    return (d.cum_weights[ih] - d.cum_weights[ih - 1]) / (v_hi - v_lo);
  };
  // Sign of the un-absolute discrepancy.
  CriticFunction f{reference, cand, mu};
  double e_p = 0.0, e_q = 0.0;
  for (std::size_t i = 0; i < reference.values.size(); ++i)
    e_p += reference.weights[i] * critic_eval(f, reference.values[i]);
  for (std::size_t j = 0; j < cand.values.size(); ++j)
    e_q += cand.weights[j] * critic_eval(f, cand.values[j]);
  const double sgn = (e_p > e_q) ? 1.0 : ((e_p < e_q) ? -1.0 : 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double q = candidate_values[j];
    // d|O|/dq_j with the candidate's own CDF inside f held fixed.
    grad[j] = sgn * (-inv_n) * (slope_at(reference, q) + mu * slope_at(cand, q));
  }
  return grad;
}

}  // namespace advsp

#endif  // ADVSP_CRAMER_HPP
