// advsp/frontend.hpp
// Log-mel feature frontend realized as fixed matrix products so the backward
// pass to the waveform is the exact chain-rule transpose.

#ifndef ADVSP_FRONTEND_HPP
#define ADVSP_FRONTEND_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "advsp/audio.hpp"

namespace advsp {

struct FrontendConfig {
  int frame_len = 400;    // 25 ms at 16 kHz
  int hop_len = 160;      // 10 ms
  int num_mels = 40;
  int dft_size = 512;
  double log_floor = 1e-8;

  bool operator==(const FrontendConfig &o) const = default;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Frame -> window -> DFT power (cos/sin bases) -> mel filterbank -> log.
// Every stage before the log is linear or an elementwise square, so the
// backward pass is a handful of transposed GEMMs.
class LogMelFrontend {
 public:
  LogMelFrontend(const FrontendConfig &cfg, int sample_rate_hz)
      : cfg_(cfg), sample_rate_hz_(sample_rate_hz) {
    if (cfg.dft_size < cfg.frame_len)
      throw std::invalid_argument("frontend: dft_size < frame_len");
    if (cfg.num_mels >= cfg.dft_size / 2)
      throw std::invalid_argument("frontend: num_mels >= dft_size/2");
    build_bases();
    build_mel_bank();
  }

  const FrontendConfig &config() const { return cfg_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  int num_bins() const { return cfg_.dft_size / 2 + 1; }

  struct Computation {
    Eigen::MatrixXd feats;       // frames x num_mels
    // Cached intermediates for the backward pass.
    Eigen::MatrixXd windowed;    // frames x frame_len
    Eigen::MatrixXd cos_part;    // frames x bins
    Eigen::MatrixXd sin_part;    // frames x bins
    Eigen::MatrixXd mel_energy;  // frames x num_mels (pre-log, no floor)
    std::size_t signal_len = 0;
  };

  Computation forward(const Waveform &w) const {
    if (w.size() < static_cast<std::size_t>(cfg_.frame_len))
      throw std::invalid_argument("frontend: signal shorter than one frame");
    Computation c;
    c.signal_len = w.size();
    FrameMatrix fm = frame_signal(w, cfg_.frame_len, cfg_.hop_len, WindowKind::kHann);
    c.windowed = std::move(fm.frames);
    c.cos_part.noalias() = c.windowed * cos_basis_.transpose();
    c.sin_part.noalias() = c.windowed * sin_basis_.transpose();
    Eigen::MatrixXd power =
        c.cos_part.array().square() + c.sin_part.array().square();
    c.mel_energy.noalias() = power * mel_bank_.transpose();
    c.feats = (c.mel_energy.array() + cfg_.log_floor).log();
    return c;
  }

  // Exact transpose of the forward chain: d feats -> d waveform.
  std::vector<double> backward(const Computation &c,
                               const Eigen::MatrixXd &dfeats) const {
    if (dfeats.rows() != c.feats.rows() || dfeats.cols() != c.feats.cols())
      throw std::invalid_argument("frontend backward: shape mismatch");
    Eigen::MatrixXd dmel =
        dfeats.array() / (c.mel_energy.array() + cfg_.log_floor);
    Eigen::MatrixXd dpower = dmel * mel_bank_;
    Eigen::MatrixXd dwindowed =
        (2.0 * (dpower.array() * c.cos_part.array())).matrix() * cos_basis_ +
        (2.0 * (dpower.array() * c.sin_part.array())).matrix() * sin_basis_;
    // Un-window and overlap-add back into the signal.
    const std::vector<double> taper = hann_window(cfg_.frame_len);
    std::vector<double> grad(c.signal_len, 0.0);
    for (Eigen::Index f = 0; f < dwindowed.rows(); ++f) {
      const std::size_t off = static_cast<std::size_t>(f) * cfg_.hop_len;
      for (int i = 0; i < cfg_.frame_len; ++i)
        grad[off + i] += dwindowed(f, i) * taper[i];
    }
    return grad;
  }

  const Eigen::MatrixXd &mel_bank() const { return mel_bank_; }

 private:
  void build_bases() {
    const int bins = num_bins();
    cos_basis_.resize(bins, cfg_.frame_len);
    sin_basis_.resize(bins, cfg_.frame_len);
    for (int k = 0; k < bins; ++k) {
      for (int n = 0; n < cfg_.frame_len; ++n) {
        const double ang = 2.0 * M_PI * k * n / cfg_.dft_size;
        cos_basis_(k, n) = std::cos(ang);
        sin_basis_(k, n) = -std::sin(ang);
      }
    }
  }

  void build_mel_bank() {
    const int bins = num_bins();
    mel_bank_ = Eigen::MatrixXd::Zero(cfg_.num_mels, bins);
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(sample_rate_hz_ / 2.0);
    std::vector<double> centers(cfg_.num_mels + 2);
    for (int i = 0; i < cfg_.num_mels + 2; ++i)
      centers[i] =
          mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg_.num_mels + 1));
    const double bin_hz = static_cast<double>(sample_rate_hz_) / cfg_.dft_size;
    for (int m = 0; m < cfg_.num_mels; ++m) {
      const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
      for (int k = 0; k < bins; ++k) {
        const double f = k * bin_hz;
        if (f > lo && f < mid)
          mel_bank_(m, k) = (f - lo) / (mid - lo);
        else if (f >= mid && f < hi)
          mel_bank_(m, k) = (hi - f) / (hi - mid);
      }
    }
  }

  FrontendConfig cfg_;
  int sample_rate_hz_;
  Eigen::MatrixXd cos_basis_;  // bins x frame_len
  Eigen::MatrixXd sin_basis_;
  Eigen::MatrixXd mel_bank_;   // num_mels x bins
};

// Mel band center frequency in Hz for band m (0-based), matching the bank
// built above. Used by the synthetic corpus tests.
inline double mel_band_center_hz(const FrontendConfig &cfg, int sample_rate_hz,
                                 int m) {
  const double mel_hi = hz_to_mel(sample_rate_hz / 2.0);
  return mel_to_hz(mel_hi * (m + 1) / (cfg.num_mels + 1));
}

}  // namespace advsp

#endif  // ADVSP_FRONTEND_HPP
