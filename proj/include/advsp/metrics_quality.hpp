// advsp/metrics_quality.hpp
// Signal-quality metrics between an original and an adversarial waveform:
// segmental SNR, short-term objective intelligibility, and the LPC-based
// log-likelihood ratio.

#ifndef ADVSP_METRICS_QUALITY_HPP
#define ADVSP_METRICS_QUALITY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "advsp/audio.hpp"

namespace advsp {

// Mean of per-frame 10*log10(sum x^2 / sum (x - x_hat)^2), each frame
// clamped to [-10, 35] dB, averaged over frames whose reference energy
// exceeds 1e-8. Framing is 25 ms / 10 ms hop.
inline double seg_snr(const Waveform &x_org, const Waveform &x_adv) {
  if (x_org.size() != x_adv.size() ||
      x_org.sample_rate_hz != x_adv.sample_rate_hz)
    throw std::invalid_argument("seg_snr: mismatched signals");
  const int frame_len = x_org.sample_rate_hz / 40;  // 25 ms
  const int hop_len = x_org.sample_rate_hz / 100;   // 10 ms
  if (x_org.size() < static_cast<std::size_t>(frame_len))
    throw std::invalid_argument("seg_snr: signal shorter than one frame");
  const std::size_t n = num_frames_for(x_org.size(), frame_len, hop_len);
  double total = 0.0;
  std::size_t active = 0;
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t off = f * hop_len;
    double sig = 0.0, err = 0.0;
    for (int i = 0; i < frame_len; ++i) {
      const double x = x_org.samples[off + i];
      const double e = x - x_adv.samples[off + i];
      sig += x * x;
      err += e * e;
    }
    if (sig <= 1e-8) continue;  // silent reference frames excluded
    double snr = (err == 0.0) ? 35.0 : 10.0 * std::log10(sig / err);
    snr = std::clamp(snr, -10.0, 35.0);
    total += snr;
    ++active;
  }
  if (active == 0) throw std::runtime_error("seg_snr: no active frames");
  return total / static_cast<double>(active);
}

namespace detail {

struct StoiSetup {
  int frame_len, hop_len, dft_size, seg_frames;
  // band x bin weights, 15 one-third-octave bands from 150 Hz
  std::vector<std::vector<int>> band_bins;
};

inline StoiSetup stoi_setup(int sample_rate_hz) {
  StoiSetup s;
  s.frame_len = sample_rate_hz * 16 / 1000;  // 16 ms
  s.hop_len = s.frame_len / 2;               // 8 ms -> 48 frames = 384 ms
  s.dft_size = 1;
  while (s.dft_size < s.frame_len) s.dft_size <<= 1;
  s.seg_frames = 48;
  const double bin_hz = static_cast<double>(sample_rate_hz) / s.dft_size;
  s.band_bins.resize(15);
  for (int b = 0; b < 15; ++b) {
    const double lo = 150.0 * std::pow(2.0, (b - 0.5) / 3.0);
    const double hi = 150.0 * std::pow(2.0, (b + 0.5) / 3.0);
    for (int k = 1; k <= s.dft_size / 2; ++k) {
      const double f = k * bin_hz;
      if (f >= lo && f < hi) s.band_bins[b].push_back(k);
    }
  }
  return s;
}

// band-energy envelope: rows = frames, cols = 15 bands
inline Eigen::MatrixXd stoi_envelope(const Waveform &w, const StoiSetup &s) {
  FrameMatrix fm = frame_signal(w, s.frame_len, s.hop_len, WindowKind::kHann);
  const int frames = static_cast<int>(fm.frames.rows());
  const int bins = s.dft_size / 2 + 1;
  Eigen::MatrixXd cosb(bins, s.frame_len), sinb(bins, s.frame_len);
  for (int k = 0; k < bins; ++k)
    for (int n = 0; n < s.frame_len; ++n) {
      const double ang = 2.0 * M_PI * k * n / s.dft_size;
      cosb(k, n) = std::cos(ang);
      sinb(k, n) = std::sin(ang);
    }
  Eigen::MatrixXd re = fm.frames * cosb.transpose();
  Eigen::MatrixXd im = fm.frames * sinb.transpose();
  Eigen::MatrixXd power = re.array().square() + im.array().square();
  Eigen::MatrixXd env(frames, 15);
  for (int b = 0; b < 15; ++b) {
    for (int f = 0; f < frames; ++f) {
      double e = 0.0;
      for (int k : s.band_bins[b]) e += power(f, k);
      env(f, b) = std::sqrt(e);
    }
  }
  return env;
}

}  // namespace detail

// Short-term objective intelligibility: one-third-octave band envelopes,
// 384 ms sliding segments, per-segment energy normalization of the degraded
// envelope, clipping at -15 dB SDR, correlation averaged over bands and
// segments, final clamp to [0, 1].
inline double stoi(const Waveform &x_org, const Waveform &x_adv) {
  if (x_org.size() != x_adv.size() ||
      x_org.sample_rate_hz != x_adv.sample_rate_hz)
    throw std::invalid_argument("stoi: mismatched signals");
  const detail::StoiSetup s = detail::stoi_setup(x_org.sample_rate_hz);
  const std::size_t min_len =
      static_cast<std::size_t>(s.frame_len + (s.seg_frames - 1) * s.hop_len);
  if (x_org.size() < min_len)
    throw std::invalid_argument("stoi: need at least 384 ms of signal");

  Eigen::MatrixXd ex_all = detail::stoi_envelope(x_org, s);
  Eigen::MatrixXd ey_all = detail::stoi_envelope(x_adv, s);

  // drop reference frames more than 40 dB below the loudest one (the usual
  // silence exclusion; the mask comes from the clean signal only)
  Eigen::VectorXd frame_norm = ex_all.rowwise().norm();
  const double thresh = frame_norm.maxCoeff() * 1e-2;  // -40 dB
  std::vector<int> keep;
  for (int f = 0; f < static_cast<int>(ex_all.rows()); ++f)
    if (frame_norm[f] > thresh) keep.push_back(f);
  if (static_cast<int>(keep.size()) < s.seg_frames)
    throw std::runtime_error("stoi: not enough active frames");
  Eigen::MatrixXd ex(keep.size(), 15), ey(keep.size(), 15);
  for (std::size_t f = 0; f < keep.size(); ++f) {
    ex.row(f) = ex_all.row(keep[f]);
    ey.row(f) = ey_all.row(keep[f]);
  }
  const int frames = static_cast<int>(ex.rows());
  const double clip_gain = std::pow(10.0, 15.0 / 20.0);  // beta = -15 dB

  double corr_sum = 0.0;
  long corr_count = 0;
  for (int seg = 0; seg + s.seg_frames <= frames; ++seg) {
    for (int b = 0; b < 15; ++b) {
      Eigen::VectorXd x = ex.col(b).segment(seg, s.seg_frames);
      Eigen::VectorXd y = ey.col(b).segment(seg, s.seg_frames);
      const double xn = x.norm(), yn = y.norm();
      if (xn == 0.0 || yn == 0.0) continue;
      y *= xn / yn;  // per-band-segment normalization
      for (int i = 0; i < s.seg_frames; ++i)
        y[i] = std::min(y[i], x[i] * (1.0 + clip_gain));
      const Eigen::VectorXd xc = x.array() - x.mean();
      const Eigen::VectorXd yc = y.array() - y.mean();
      const double denom = xc.norm() * yc.norm();
      if (denom == 0.0) continue;
      corr_sum += xc.dot(yc) / denom;
      ++corr_count;
    }
  }
  if (corr_count == 0) throw std::runtime_error("stoi: no usable segments");
  return std::clamp(corr_sum / static_cast<double>(corr_count), 0.0, 1.0);
}

namespace detail {

// Levinson-Durbin recursion: autocorrelation -> LPC coefficients
// a = [1, a_1, ..., a_p]. Returns false on degenerate (zero-energy) input.
inline bool levinson_durbin(const std::vector<double> &r, int order,
                            std::vector<double> *a_out) {
  if (r[0] <= 0.0) return false;
  std::vector<double> a(order + 1, 0.0), prev(order + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (int j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (err <= 0.0) return false;
  }
  *a_out = std::move(a);
  return true;
}

inline std::vector<double> autocorrelation(const double *x, int n, int order) {
  std::vector<double> r(order + 1, 0.0);
  for (int lag = 0; lag <= order; ++lag)
    for (int i = lag; i < n; ++i) r[lag] += x[i] * x[i - lag];
  return r;
}

// a R a^T with R the Toeplitz autocorrelation matrix.
inline double lpc_quadratic(const std::vector<double> &a,
                            const std::vector<double> &r) {
  const int p = static_cast<int>(a.size()) - 1;
  double total = 0.0;
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= p; ++j)
      total += a[i] * a[j] * r[std::abs(i - j)];
  return total;
}

}  // namespace detail

// Itakura log-likelihood ratio between order-10 LPC envelopes, computed per
// 25 ms frame (10 ms hop, Hann window), aggregated by median, clamped to
// [0, 1]. Identical signals give exactly 0. raw_values optionally receives
// the unclamped per-frame ratios.
inline double llr(const Waveform &x_org, const Waveform &x_adv,
                  std::vector<double> *raw_values = nullptr) {
  if (x_org.size() != x_adv.size() ||
      x_org.sample_rate_hz != x_adv.sample_rate_hz)
    throw std::invalid_argument("llr: mismatched signals");
  const int order = 10;
  const int frame_len = x_org.sample_rate_hz / 40;
  const int hop_len = x_org.sample_rate_hz / 100;
  if (x_org.size() < static_cast<std::size_t>(frame_len))
    throw std::invalid_argument("llr: signal shorter than one frame");

  FrameMatrix fo = frame_signal(x_org, frame_len, hop_len, WindowKind::kHann);
  FrameMatrix fa = frame_signal(x_adv, frame_len, hop_len, WindowKind::kHann);
  std::vector<double> ratios;
  std::vector<double> row_o(frame_len), row_a(frame_len);
  for (Eigen::Index f = 0; f < fo.frames.rows(); ++f) {
    for (int i = 0; i < frame_len; ++i) {
      row_o[i] = fo.frames(f, i);
      row_a[i] = fa.frames(f, i);
    }
    const auto r_org = detail::autocorrelation(row_o.data(), frame_len, order);
    const auto r_adv = detail::autocorrelation(row_a.data(), frame_len, order);
    std::vector<double> a_org, a_adv;
    if (!detail::levinson_durbin(r_org, order, &a_org)) continue;
    if (!detail::levinson_durbin(r_adv, order, &a_adv)) continue;
    const double num = detail::lpc_quadratic(a_adv, r_org);
    const double den = detail::lpc_quadratic(a_org, r_org);
    if (den <= 0.0 || num <= 0.0) continue;
    ratios.push_back(std::log(num / den));
  }
  if (ratios.empty()) throw std::runtime_error("llr: all frames degenerate");
  if (raw_values) *raw_values = ratios;
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return std::clamp(median, 0.0, 1.0);
}

}  // namespace advsp

#endif  // ADVSP_METRICS_QUALITY_HPP
