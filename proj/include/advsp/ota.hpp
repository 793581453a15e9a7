// advsp/ota.hpp
// Evaluation-time playback simulation: RIR convolution, optional band-pass,
// additive white Gaussian noise, and the consecutive-playback robustness
// counter. None of this is used inside the attack optimization.

#ifndef ADVSP_OTA_HPP
#define ADVSP_OTA_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advsp/audio.hpp"
#include "advsp/rng.hpp"
#include "advsp/victim.hpp"

namespace advsp {

struct Rir {
  std::vector<double> taps;
  std::string descriptor;  // "unit", "exp:rt60=...,seed=...", "file:<path>"
};

inline Rir rir_unit() { return Rir{{1.0}, "unit"}; }

// Noise-excited exponential decay: taps_t = exp(-6.9078 * t / rt60) * g_t
// with seeded standard-normal g, tap 0 forced positive (direct path),
// length 0.25 * rt60 * sample_rate, normalized to unit energy.
inline Rir rir_exp_decay(double rt60_s, std::uint64_t seed, int sample_rate_hz) {
  if (!(rt60_s > 0.0))
    throw std::invalid_argument("rir_exp_decay: rt60 must be positive");
  const std::size_t len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(0.25 * rt60_s * sample_rate_hz)));
  auto eng = make_engine(mix64(seed ^ 0x414Aull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Rir r;
  r.taps.resize(len);
  double energy = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    const double env =
        std::exp(-6.9078 * (static_cast<double>(t) / sample_rate_hz) / rt60_s);
    double g = gauss(eng);
    if (t == 0) g = std::fabs(g);
    r.taps[t] = env * g;
    energy += r.taps[t] * r.taps[t];
  }
  const double norm = 1.0 / std::sqrt(energy);
  for (double &tap : r.taps) tap *= norm;
  std::ostringstream d;
  d << "exp:rt60=" << rt60_s << ",seed=" << seed;
  r.descriptor = d.str();
  return r;
}

// Plain text, one tap per line.
inline Rir rir_from_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("rir_from_file: cannot open " + path);
  Rir r;
  double v;
  while (in >> v) r.taps.push_back(v);
  if (r.taps.empty())
    throw std::runtime_error("rir_from_file: no taps in " + path);
  r.descriptor = "file:" + path;
  return r;
}

inline void write_rir(const std::string &path, const Rir &r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_rir: cannot open " + path);
  out.precision(17);
  for (double t : r.taps) out << t << "\n";
}

// Descriptor grammar: `unit` | `exp:rt60=<s>,seed=<n>` | `file:<path>`.
inline Rir parse_rir_descriptor(const std::string &desc, int sample_rate_hz) {
  if (desc == "unit") return rir_unit();
  if (desc.rfind("file:", 0) == 0) return rir_from_file(desc.substr(5));
  if (desc.rfind("exp:", 0) == 0) {
    double rt60 = -1.0;
    std::uint64_t seed = 0;
    std::string rest = desc.substr(4);
    std::istringstream ss(rest);
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) break;
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "rt60")
        rt60 = std::stod(val);
      else if (key == "seed")
        seed = std::stoull(val);
    }
    if (rt60 > 0.0) return rir_exp_decay(rt60, seed, sample_rate_hz);
  }
  throw std::invalid_argument(
      "bad RIR descriptor '" + desc +
      "'; expected unit | exp:rt60=<s>,seed=<n> | file:<path>");
}

struct PlaybackConfig {
  Rir rir = rir_unit();
  std::optional<double> noise_snr_db;          // omega's level vs. signal RMS
  std::optional<std::pair<double, double>> bandpass_hz;  // Yakura preset [1k, 4k]
  std::uint64_t seed = 0;
};

namespace detail {

// Full convolution truncated to the input length.
inline std::vector<double> convolve_truncated(const std::vector<double> &x,
                                              const std::vector<double> &h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double tap = h[k];
    if (tap == 0.0) continue;
    for (std::size_t i = k; i < x.size(); ++i) y[i] += tap * x[i - k];
  }
  return y;
}

// Linear-phase windowed-sinc band-pass, fixed 101 taps, Hamming window.
inline std::vector<double> bandpass_fir(double low_hz, double high_hz,
                                        int sample_rate_hz, int taps = 101) {
  if (!(low_hz > 0.0) || !(high_hz > low_hz) ||
      !(high_hz < sample_rate_hz / 2.0))
    throw std::invalid_argument("bandpass: need 0 < low < high < Nyquist");
  std::vector<double> h(taps);
  const int mid = taps / 2;
  const double wl = 2.0 * M_PI * low_hz / sample_rate_hz;
  const double wh = 2.0 * M_PI * high_hz / sample_rate_hz;
  for (int i = 0; i < taps; ++i) {
    const int k = i - mid;
    double v;
    if (k == 0)
      v = (wh - wl) / M_PI;
    else
      v = (std::sin(wh * k) - std::sin(wl * k)) / (M_PI * k);
    v *= 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (taps - 1));
    h[i] = v;
  }
  return h;
}

// Convolve and compensate the filter's group delay so the output stays
// aligned with the input.
inline std::vector<double> apply_fir_centered(const std::vector<double> &x,
                                              const std::vector<double> &h) {
  const std::size_t delay = h.size() / 2;
  std::vector<double> full(x.size() + h.size() - 1, 0.0);
  for (std::size_t k = 0; k < h.size(); ++k)
    for (std::size_t i = 0; i < x.size(); ++i) full[i + k] += h[k] * x[i];
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = full[i + delay];
  return y;
}

}  // namespace detail

// Band-pass -> RIR convolution -> additive WGN at the requested SNR
// (defined against the pre-noise processed signal's RMS) -> clamp.
inline Waveform playback(const Waveform &w, const PlaybackConfig &cfg) {
  Waveform out = w;
  if (cfg.bandpass_hz) {
    const auto fir = detail::bandpass_fir(cfg.bandpass_hz->first,
                                          cfg.bandpass_hz->second,
                                          w.sample_rate_hz);
    out.samples = detail::apply_fir_centered(out.samples, fir);
  }
  if (cfg.rir.taps.size() != 1 || cfg.rir.taps[0] != 1.0)
    out.samples = detail::convolve_truncated(out.samples, cfg.rir.taps);
  if (cfg.noise_snr_db) {
    double rms = 0.0;
    for (double s : out.samples) rms += s * s;
    rms = std::sqrt(rms / static_cast<double>(out.samples.size()));
    const double sigma = rms * std::pow(10.0, -*cfg.noise_snr_db / 20.0);
    auto eng = make_engine(mix64(cfg.seed ^ 0x0AA5Eull));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double &s : out.samples) s += sigma * gauss(eng);
  }
  clamp_amplitudes(out);
  return out;
}

struct RobustnessReport {
  int n_ota = 0;  // initial consecutive rounds whose transcript == target
  std::vector<TokenSeq> per_round_transcripts;
};

// Iterated playback: x <- playback(x); per-round seeds derive from
// cfg.seed so a fixed config reproduces the whole chain.
inline RobustnessReport measure_n_ota(const VictimModel &m,
                                      const Waveform &x_adv,
                                      const TokenSeq &target,
                                      const PlaybackConfig &cfg,
                                      int max_rounds) {
  if (max_rounds < 1)
    throw std::invalid_argument("measure_n_ota: max_rounds must be >= 1");
  RobustnessReport report;
  Waveform x = x_adv;
  bool chain_alive = true;
  for (int round = 0; round < max_rounds; ++round) {
    PlaybackConfig round_cfg = cfg;
    round_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(round));
    x = playback(x, round_cfg);
    TokenSeq decoded = transcribe(m, x);
    if (chain_alive && decoded == target)
      ++report.n_ota;
    else
      chain_alive = false;
    report.per_round_transcripts.push_back(std::move(decoded));
  }
  return report;
}

}  // namespace advsp

#endif  // ADVSP_OTA_HPP
