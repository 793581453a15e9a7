#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "advsp/corpus.hpp"
#include "advsp/ota.hpp"

using namespace advsp;

namespace {

std::vector<double> random_signal(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  std::vector<double> v(n);
  for (double &x : v) x = d(eng);
  return v;
}

// O(n*k) reference convolution, truncated to the input length.
std::vector<double> naive_convolve(const std::vector<double> &x,
                                   const std::vector<double> &h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k <= i && k < h.size(); ++k)
      y[i] += h[k] * x[i - k];
  return y;
}

}  // namespace

TEST_CASE("unit RIR playback is the identity") {
  Waveform w;
  w.samples = random_signal(1, 4000);
  PlaybackConfig cfg;  // unit rir, no noise, no bandpass
  Waveform out = playback(w, cfg);
  REQUIRE(out.samples == w.samples);
}

TEST_CASE("exponential RIR has unit energy and the right decay rate") {
  const int sr = 16000;
  const double rt60 = 0.4;
  Rir r = rir_exp_decay(rt60, 3, sr);
  CHECK(r.taps.size() == static_cast<std::size_t>(std::lround(0.25 * rt60 * sr)));
  double energy = 0.0;
  for (double t : r.taps) energy += t * t;
  CHECK(energy == Catch::Approx(1.0).margin(1e-12));
  CHECK(r.taps[0] > 0.0);  // direct path
  // regression oracle on the envelope: the energy in the second half of the
  // response must fall below the first half by roughly the e^{-13.8 t/rt60}
  // power envelope ratio (noise-excited, so allow a wide band)
  const std::size_t half = r.taps.size() / 2;
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t t = 0; t < half; ++t) e1 += r.taps[t] * r.taps[t];
  for (std::size_t t = half; t < r.taps.size(); ++t) e2 += r.taps[t] * r.taps[t];
  const double half_s = static_cast<double>(half) / sr;
  const double expected_ratio = std::exp(-2.0 * 6.9078 * half_s / rt60);
  CHECK(e2 / e1 > expected_ratio / 8.0);
  CHECK(e2 / e1 < expected_ratio * 8.0);
  CHECK_THROWS_AS(rir_exp_decay(0.0, 0, sr), std::invalid_argument);
}

TEST_CASE("RIR convolution matches the naive oracle") {
  const auto x = random_signal(5, 600);
  const Rir r = rir_exp_decay(0.05, 9, 16000);
  const auto fast = detail::convolve_truncated(x, r.taps);
  const auto slow = naive_convolve(x, r.taps);
  REQUIRE(fast.size() == slow.size());
  for (std::size_t i = 0; i < fast.size(); ++i)
    REQUIRE(fast[i] == Catch::Approx(slow[i]).margin(1e-12));
}

TEST_CASE("noise lands at the requested SNR") {
  Waveform w;
  w.samples = random_signal(7, 64000);
  PlaybackConfig cfg;
  cfg.noise_snr_db = 20.0;
  cfg.seed = 4;
  Waveform out = playback(w, cfg);
  double sig = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sig += w.samples[i] * w.samples[i];
    const double e = out.samples[i] - w.samples[i];
    noise += e * e;
  }
  const double measured = 10.0 * std::log10(sig / noise);
  CHECK(measured == Catch::Approx(20.0).margin(0.5));
}

TEST_CASE("playback is linear before the clamp") {
  Waveform a;
  a.samples = random_signal(11, 3000);
  for (double &s : a.samples) s *= 0.1;  // stay far from the clamp
  PlaybackConfig cfg;
  cfg.rir = rir_exp_decay(0.1, 2, 16000);
  Waveform ya = playback(a, cfg);
  Waveform b = a;
  for (double &s : b.samples) s *= 2.0;
  Waveform yb = playback(b, cfg);
  for (std::size_t i = 0; i < a.size(); ++i)
    REQUIRE(yb.samples[i] == Catch::Approx(2.0 * ya.samples[i]).margin(1e-12));
}

TEST_CASE("band-pass removes out-of-band tones and keeps in-band ones") {
  const int sr = 16000;
  Waveform w;
  w.sample_rate_hz = sr;
  w.samples.resize(sr);
  for (int i = 0; i < sr; ++i)
    w.samples[i] = 0.3 * std::sin(2.0 * M_PI * 2000.0 * i / sr) +
                   0.3 * std::sin(2.0 * M_PI * 200.0 * i / sr);
  PlaybackConfig cfg;
  cfg.bandpass_hz = {1000.0, 4000.0};
  Waveform out = playback(w, cfg);
  // correlate against each tone over the interior (skip filter edges)
  auto tone_power = [&](const Waveform &x, double hz) {
    double re = 0.0, im = 0.0;
    for (int i = 200; i < sr - 200; ++i) {
      re += x.samples[i] * std::cos(2.0 * M_PI * hz * i / sr);
      im += x.samples[i] * std::sin(2.0 * M_PI * hz * i / sr);
    }
    return re * re + im * im;
  };
  CHECK(tone_power(out, 2000.0) > 0.5 * tone_power(w, 2000.0));
  CHECK(tone_power(out, 200.0) < 0.01 * tone_power(w, 200.0));
  CHECK_THROWS_AS(detail::bandpass_fir(4000.0, 1000.0, sr), std::invalid_argument);
  CHECK_THROWS_AS(detail::bandpass_fir(1000.0, 9000.0, sr), std::invalid_argument);
}

TEST_CASE("n_ota counts initial consecutive hits only") {
  // stub chain via a crafted model is overkill; drive measure_n_ota with a
  // unit channel so every round decodes identically, then cross-check the
  // counting rule on the recorded transcripts with a hand-rolled scan
  VictimModel m = init_victim(FrontendConfig{}, default_vocabulary(), 16000, 2);
  m.feat_shift = 0.0;
  m.feat_scale = 1.0;
  Waveform w = render_phrase({4, 10}, 16000, 6);
  const TokenSeq stable = transcribe(m, w);

  PlaybackConfig unit_cfg;  // identity playback
  RobustnessReport hit = measure_n_ota(m, w, stable, unit_cfg, 5);
  CHECK(hit.n_ota == 5);
  REQUIRE(hit.per_round_transcripts.size() == 5);

  TokenSeq other = stable;
  other.push_back(1);
  RobustnessReport miss = measure_n_ota(m, w, other, unit_cfg, 5);
  CHECK(miss.n_ota == 0);

  // noisy channel: recompute the count from the transcript log
  PlaybackConfig noisy;
  noisy.rir = rir_exp_decay(0.2, 1, 16000);
  noisy.noise_snr_db = 5.0;
  noisy.seed = 12;
  RobustnessReport rep = measure_n_ota(m, w, stable, noisy, 8);
  int oracle = 0;
  for (const TokenSeq &t : rep.per_round_transcripts) {
    if (t == stable)
      ++oracle;
    else
      break;
  }
  CHECK(rep.n_ota == oracle);
  CHECK_THROWS_AS(measure_n_ota(m, w, stable, noisy, 0), std::invalid_argument);
}

TEST_CASE("measure_n_ota is deterministic per seed") {
  VictimModel m = init_victim(FrontendConfig{}, default_vocabulary(), 16000, 2);
  m.feat_shift = 0.0;
  m.feat_scale = 1.0;
  Waveform w = render_phrase({4}, 16000, 6);
  PlaybackConfig cfg;
  cfg.rir = rir_exp_decay(0.15, 3, 16000);
  cfg.noise_snr_db = 10.0;
  cfg.seed = 77;
  RobustnessReport a = measure_n_ota(m, w, transcribe(m, w), cfg, 4);
  RobustnessReport b = measure_n_ota(m, w, transcribe(m, w), cfg, 4);
  CHECK(a.n_ota == b.n_ota);
  CHECK(a.per_round_transcripts == b.per_round_transcripts);
}

TEST_CASE("RIR descriptors: grammar, file round trip, errors") {
  namespace fs = std::filesystem;
  CHECK(parse_rir_descriptor("unit", 16000).taps == std::vector<double>{1.0});
  Rir e = parse_rir_descriptor("exp:rt60=0.3,seed=7", 16000);
  CHECK(e.taps == rir_exp_decay(0.3, 7, 16000).taps);

  const fs::path p = fs::temp_directory_path() / "advsp_rir_test.txt";
  write_rir(p.string(), e);
  Rir r = parse_rir_descriptor("file:" + p.string(), 16000);
  REQUIRE(r.taps.size() == e.taps.size());
  for (std::size_t i = 0; i < r.taps.size(); ++i)
    REQUIRE(r.taps[i] == Catch::Approx(e.taps[i]).margin(1e-15));
  fs::remove(p);

  CHECK_THROWS_WITH(parse_rir_descriptor("gibberish", 16000),
                    Catch::Matchers::ContainsSubstring("expected unit"));
  CHECK_THROWS_AS(parse_rir_descriptor("exp:seed=1", 16000), std::invalid_argument);
}
