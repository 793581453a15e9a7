// advsp/corpus.hpp
// Deterministic synthetic speech corpus (token-indexed two-tone chirps) and
// the plain-text manifest ingestion path for real WAV directories.

#ifndef ADVSP_CORPUS_HPP
#define ADVSP_CORPUS_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advsp/audio.hpp"
#include "advsp/ctc.hpp"
#include "advsp/rng.hpp"

namespace advsp {

struct CorpusItem {
  Waveform wav;
  TokenSeq transcript;
  bool held_out = false;
};

struct Corpus {
  std::vector<CorpusItem> items;

  std::vector<const CorpusItem *> split(bool held_out) const {
    std::vector<const CorpusItem *> out;
    for (const auto &it : items)
      if (it.held_out == held_out) out.push_back(&it);
    return out;
  }
};

struct SynthConfig {
  int num_utterances = 50;
  int phrase_len_min = 3;
  int phrase_len_max = 6;
  std::uint64_t seed = 1;
  int sample_rate_hz = 16000;
};

namespace synth {

constexpr double kTokenSeconds = 0.120;
constexpr double kGapSeconds = 0.030;
constexpr double kPadSeconds = 0.050;
constexpr double kNoisePeak = 0.01;

// Base frequency of a token's louder tone; the second tone sits at 1.5x.
// Spaced uniformly on the mel scale (~75 mel per token, about one filterbank
// band) so every token keeps its own band in the victim's frontend.
inline double token_base_hz(int token_id) {
  const double mel = 400.0 + 75.0 * (token_id - 1);
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace synth

// Renders one phrase: leading/trailing pads, 120 ms two-tone chirp per token
// (slight upward sweep), 30 ms gaps, plus low-level uniform noise.
inline Waveform render_phrase(const TokenSeq &phrase, int sample_rate_hz,
                              std::uint64_t seed) {
  using namespace synth;
  const int sr = sample_rate_hz;
  const int tok_n = static_cast<int>(std::lround(kTokenSeconds * sr));
  const int gap_n = static_cast<int>(std::lround(kGapSeconds * sr));
  const int pad_n = static_cast<int>(std::lround(kPadSeconds * sr));
  const std::size_t total =
      2 * pad_n + phrase.size() * tok_n +
      (phrase.empty() ? 0 : (phrase.size() - 1) * gap_n);

  Waveform w;
  w.sample_rate_hz = sr;
  w.samples.assign(total, 0.0);
  std::size_t pos = pad_n;
  for (std::size_t i = 0; i < phrase.size(); ++i) {
    const double f1 = synth::token_base_hz(phrase[i]);
    const double f2 = 1.5 * f1;
    const double sweep = 40.0;  // Hz over the token
    for (int n = 0; n < tok_n; ++n) {
      const double t = static_cast<double>(n) / sr;
      const double frac = static_cast<double>(n) / tok_n;
      // linear chirp: instantaneous f = f + sweep*frac
      const double ph1 = 2.0 * M_PI * (f1 * t + 0.5 * sweep * frac * t);
      const double ph2 = 2.0 * M_PI * (f2 * t + 0.5 * sweep * frac * t);
      w.samples[pos + n] = 0.45 * std::sin(ph1) + 0.30 * std::sin(ph2);
    }
    pos += tok_n;
    if (i + 1 < phrase.size()) pos += gap_n;
  }
  auto eng = make_engine(seed);
  std::uniform_real_distribution<double> noise(-kNoisePeak, kNoisePeak);
  for (double &s : w.samples) s += noise(eng);
  clamp_amplitudes(w);
  return w;
}

// Deterministic corpus: fixed seed gives a bit-identical corpus; the first
// floor(0.8 n) utterances are the train split.
inline Corpus synth_corpus(const SynthConfig &cfg, const Vocabulary &vocab) {
  if (cfg.num_utterances < 2)
    throw std::invalid_argument("synth_corpus: need at least 2 utterances");
  if (cfg.phrase_len_min < 1)
    throw std::invalid_argument("synth_corpus: phrase length of zero");
  if (cfg.phrase_len_max < cfg.phrase_len_min)
    throw std::invalid_argument("synth_corpus: bad phrase length range");

  Corpus corpus;
  const int train_count = (cfg.num_utterances * 4) / 5;
  for (int u = 0; u < cfg.num_utterances; ++u) {
    auto eng = make_engine(derive_seed(cfg.seed, static_cast<std::uint64_t>(u)));
    std::uniform_int_distribution<int> len_d(cfg.phrase_len_min, cfg.phrase_len_max);
    std::uniform_int_distribution<int> tok_d(1, vocab.size() - 1);
    const int len = len_d(eng);
    TokenSeq phrase(len);
    for (int i = 0; i < len; ++i) phrase[i] = tok_d(eng);
    CorpusItem item;
    item.transcript = phrase;
    item.wav = render_phrase(phrase, cfg.sample_rate_hz, eng());
    item.held_out = (u >= train_count);
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

// Manifest lines: <wav-path>\t<transcript>. Paths are relative to the
// manifest's directory unless absolute.
inline Corpus load_manifest(const std::string &manifest_path,
                            const Vocabulary &vocab) {
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("load_manifest: cannot open " + manifest_path);
  std::string dir;
  const auto slash = manifest_path.find_last_of('/');
  if (slash != std::string::npos) dir = manifest_path.substr(0, slash + 1);

  Corpus corpus;
  std::string line;
  int expected_rate = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_manifest: missing tab separator in line: " + line);
    std::string path = line.substr(0, tab);
    if (!path.empty() && path[0] != '/') path = dir + path;
    CorpusItem item;
    item.wav = read_wav(path);
    if (expected_rate == 0)
      expected_rate = item.wav.sample_rate_hz;
    else if (item.wav.sample_rate_hz != expected_rate)
      throw std::runtime_error("load_manifest: mixed sample rates in corpus");
    item.transcript = vocab.encode(line.substr(tab + 1));
    corpus.items.push_back(std::move(item));
  }
  if (corpus.items.empty())
    throw std::runtime_error("load_manifest: empty manifest: " + manifest_path);
  // All manifest items train by default; callers may re-split.
  return corpus;
}

}  // namespace advsp

#endif  // ADVSP_CORPUS_HPP
