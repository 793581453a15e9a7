// advsp/attack.hpp
// The two-loop attack: CTC-loss descent on the candidate signal (outer) and
// Cramer-IPM projection toward the original-corpus amplitude distribution
// (inner), plus the loudness-only baseline and the non-targeted wrapper.

#ifndef ADVSP_ATTACK_HPP
#define ADVSP_ATTACK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "advsp/audio.hpp"
#include "advsp/cramer.hpp"
#include "advsp/victim.hpp"

namespace advsp {

enum class AttackMode { kCramer, kCw };
enum class AttackOutcome { kHitTarget, kChangedButMissed, kFailed };

struct AttackConfig {
  double epsilon_db = -16.0;   // hearing threshold, must be negative
  double loss_scale = 1.0;     // c_i
  double outer_step = 5e-4;
  bool sign_grad = true;       // sign-of-gradient outer steps
  double inner_step = 1e-3;    // per-sample cap on the IPM step
  int max_outer_iters = 2000;
  int max_inner_iters = 50;
  AttackMode mode = AttackMode::kCramer;
  CramerConfig cramer;
  std::uint64_t seed = 0;
};

struct AttackResult {
  Waveform x_adv;
  Waveform delta;
  AttackOutcome success = AttackOutcome::kFailed;
  double final_distortion_db = -std::numeric_limits<double>::infinity();
  double final_cramer2 = 0.0;
  int outer_iters = 0;
  int inner_iters_total = 0;
  TokenSeq transcript_before;
  TokenSeq transcript_after;
};

inline void validate_attack_config(const AttackConfig &cfg) {
  if (!(cfg.epsilon_db < 0.0))
    throw std::invalid_argument("attack: epsilon_db must be negative");
  if (!(cfg.outer_step > 0.0) || !(cfg.inner_step > 0.0))
    throw std::invalid_argument("attack: step sizes must be positive");
  if (cfg.max_outer_iters < 1 || cfg.max_inner_iters < 1)
    throw std::invalid_argument("attack: iteration caps must be >= 1");
}

namespace detail {

// Scales delta so the peak ratio sits just inside the epsilon_db ball.
inline void project_to_db_ball(std::vector<double> &x_c,
                               const Waveform &x_org, double epsilon_db) {
  double peak_d = 0.0, peak_o = 0.0;
  for (std::size_t i = 0; i < x_c.size(); ++i) {
    peak_d = std::max(peak_d, std::fabs(x_c[i] - x_org.samples[i]));
    peak_o = std::max(peak_o, std::fabs(x_org.samples[i]));
  }
  if (peak_d == 0.0 || peak_o == 0.0) return;
  const double limit = peak_o * std::pow(10.0, epsilon_db / 20.0) * 0.999;
  if (peak_d <= limit) return;
  const double scale = limit / peak_d;
  for (std::size_t i = 0; i < x_c.size(); ++i)
    x_c[i] = x_org.samples[i] + scale * (x_c[i] - x_org.samples[i]);
}

inline Waveform make_delta(const Waveform &x_c, const Waveform &x_org) {
  Waveform d;
  d.sample_rate_hz = x_org.sample_rate_hz;
  d.samples.resize(x_org.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i)
    d.samples[i] = x_c.samples[i] - x_org.samples[i];
  return d;
}

}  // namespace detail

inline AttackResult attack(const VictimModel &m, const Waveform &x_org,
                           const TokenSeq &target,
                           const EmpiricalDistribution &reference,
                           const AttackConfig &cfg) {
  validate_attack_config(cfg);
  AttackResult res;
  res.transcript_before = transcribe(m, x_org);
  res.x_adv = x_org;
  res.delta.sample_rate_hz = x_org.sample_rate_hz;
  res.delta.samples.assign(x_org.size(), 0.0);
  res.transcript_after = res.transcript_before;
  res.final_cramer2 =
      cramer2_distance(reference, empirical_cdf(x_org.samples));

  if (res.transcript_before == target) {
    res.success = AttackOutcome::kHitTarget;
    return res;
  }

  auto eng = make_engine(mix64(cfg.seed ^ 0xA77ACCull));
  std::uniform_real_distribution<double> mu_draw(-1.0, 1.0);

  Waveform x_c = x_org;
  const std::size_t n = x_org.size();
  bool hit = false;

  for (int outer = 0; outer < cfg.max_outer_iters && !hit; ++outer) {
    res.outer_iters = outer + 1;

    // Outer step: gradient of c * L_CTC + ||delta||_2.
    double ctc = 0.0;
    std::vector<double> grad = input_gradient(m, x_c, target, &ctc);
    if (!std::isfinite(ctc))
      throw std::runtime_error("attack: non-finite loss at outer iteration " +
                               std::to_string(outer));
    double delta_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x_c.samples[i] - x_org.samples[i];
      delta_norm += d * d;
    }
    delta_norm = std::sqrt(delta_norm);
    for (std::size_t i = 0; i < n; ++i) {
      double g = cfg.loss_scale * grad[i];
      if (delta_norm > 0.0)
        g += (x_c.samples[i] - x_org.samples[i]) / delta_norm;
      const double step =
          cfg.sign_grad ? cfg.outer_step * ((g > 0.0) - (g < 0.0))
                        : cfg.outer_step * g;
      x_c.samples[i] -= step;
    }
    clamp_amplitudes(x_c);

    // Inner loop: pull the candidate's amplitude distribution toward the
    // original corpus while the perturbation is louder than epsilon.
    if (cfg.mode == AttackMode::kCramer) {
      Waveform delta = detail::make_delta(x_c, x_org);
      double current =
          cramer2_distance(reference, empirical_cdf(x_c.samples));
      int inner = 0;
      while (inner < cfg.max_inner_iters &&
             distortion_db(delta, x_org) > cfg.epsilon_db) {
        ++inner;
        ++res.inner_iters_total;
        const double mu = mu_draw(eng);
        std::vector<double> g =
            ipm_gradient(x_c.samples, reference, cfg.cramer, mu);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::fabs(v));
        if (gmax == 0.0) break;
        const double scale = cfg.inner_step / gmax;
        Waveform trial = x_c;
        for (std::size_t i = 0; i < n; ++i) trial.samples[i] -= scale * g[i];
        clamp_amplitudes(trial);
        const double next =
            cramer2_distance(reference, empirical_cdf(trial.samples));
        if (next >= current) break;  // monotone acceptance
        x_c = std::move(trial);
        current = next;
        delta = detail::make_delta(x_c, x_org);
      }
    }

    // Both modes finish the pass inside the dB ball (the loudness guard of
    // the baseline condition; the inner loop alone has no termination
    // guarantee against it).
    detail::project_to_db_ball(x_c.samples, x_org, cfg.epsilon_db);
    clamp_amplitudes(x_c);

    res.transcript_after = transcribe(m, x_c);
    if (res.transcript_after == target) {
      Waveform delta = detail::make_delta(x_c, x_org);
      if (distortion_db(delta, x_org) < cfg.epsilon_db) hit = true;
    }
  }

  res.x_adv = x_c;
  res.delta = detail::make_delta(x_c, x_org);
  res.final_distortion_db = distortion_db(res.delta, x_org);
  res.final_cramer2 =
      cramer2_distance(reference, empirical_cdf(x_c.samples));
  if (hit)
    res.success = AttackOutcome::kHitTarget;
  else if (res.transcript_after != res.transcript_before)
    res.success = AttackOutcome::kChangedButMissed;
  else
    res.success = AttackOutcome::kFailed;
  return res;
}

// Loudness-only baseline: identical driver with the IPM projection skipped.
inline AttackResult cw_attack(const VictimModel &m, const Waveform &x_org,
                              const TokenSeq &target,
                              const EmpiricalDistribution &reference,
                              AttackConfig cfg) {
  cfg.mode = AttackMode::kCw;
  return attack(m, x_org, target, reference, cfg);
}

// Uniformly random phrase of the same length, redrawn until it differs from
// the ground truth.
inline TokenSeq pick_nontargeted(const TokenSeq &y, const Vocabulary &vocab,
                                 std::uint64_t seed) {
  int alternatives = vocab.size() - 1;
  if (alternatives < 2)
    throw std::invalid_argument("pick_nontargeted: vocabulary too small");
  if (y.empty())
    throw std::invalid_argument(
        "pick_nontargeted: empty phrase has no differing alternative");
  auto eng = make_engine(mix64(seed ^ 0x7A46E7ull));
  std::uniform_int_distribution<int> tok(1, vocab.size() - 1);
  TokenSeq out(y.size());
  do {
    for (auto &id : out) id = tok(eng);
  } while (out == y);
  return out;
}

}  // namespace advsp

#endif  // ADVSP_ATTACK_HPP
