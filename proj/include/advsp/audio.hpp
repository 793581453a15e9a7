// advsp/audio.hpp
// Mono waveform container, 16-bit PCM WAV I/O, framing, and the peak dB
// loudness measures used by the distortion conditions.

#ifndef ADVSP_AUDIO_HPP
#define ADVSP_AUDIO_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace advsp {

struct Waveform {
  std::vector<double> samples;      // amplitudes in [-1, 1]
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Waveform &o) const = default;
};

enum class WindowKind { kRect, kHann };

struct FrameMatrix {
  Eigen::MatrixXd frames;   // num_frames x frame_len, taper applied
  int hop_len = 0;
  WindowKind window = WindowKind::kRect;
};

inline std::size_t num_frames_for(std::size_t signal_len, int frame_len,
                                  int hop_len) {
  return (signal_len - static_cast<std::size_t>(frame_len)) /
             static_cast<std::size_t>(hop_len) +
         1;
}

// Periodic Hann taper.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

inline FrameMatrix frame_signal(const Waveform &w, int frame_len, int hop_len,
                                WindowKind window = WindowKind::kRect) {
  if (hop_len < 1) throw std::invalid_argument("frame_signal: hop_len < 1");
  if (frame_len < 1 || w.size() < static_cast<std::size_t>(frame_len))
    throw std::invalid_argument("frame_signal: signal shorter than one frame");
  const std::size_t n = num_frames_for(w.size(), frame_len, hop_len);
  FrameMatrix fm;
  fm.hop_len = hop_len;
  fm.window = window;
  fm.frames.resize(static_cast<Eigen::Index>(n), frame_len);
  std::vector<double> taper;
  if (window == WindowKind::kHann) taper = hann_window(frame_len);
  for (std::size_t f = 0; f < n; ++f) {
    const double *src = w.samples.data() + f * hop_len;
    for (int i = 0; i < frame_len; ++i) {
      double v = src[i];
      if (window == WindowKind::kHann) v *= taper[i];
      fm.frames(static_cast<Eigen::Index>(f), i) = v;
    }
  }
  return fm;
}

// Peak loudness in dB: 20*log10(max |sample|). All-zero input yields -inf.
inline double loudness_db(const Waveform &w) {
  if (w.samples.empty()) throw std::invalid_argument("loudness_db: empty signal");
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::fabs(s));
  if (peak == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak);
}

// Relative perturbation loudness: l_dB(delta) - l_dB(x_org).
// More negative means a quieter perturbation. Zero delta -> -inf.
inline double distortion_db(const Waveform &delta, const Waveform &x_org) {
  if (delta.size() != x_org.size() ||
      delta.sample_rate_hz != x_org.sample_rate_hz)
    throw std::invalid_argument("distortion_db: mismatched signals");
  const double ld = loudness_db(delta);
  if (std::isinf(ld)) return ld;
  return ld - loudness_db(x_org);
}

namespace detail {

inline std::uint32_t read_u32(std::istream &in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16(std::istream &in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char *>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream &out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void write_u16(std::ostream &out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace detail

// Reads a RIFF/WAVE file. Only 16-bit PCM mono is accepted; samples are
// scaled to [-1, 1] by dividing by 32768.
inline Waveform read_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path);
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("read_wav: not a RIFF file: " + path);
  detail::read_u32(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("read_wav: not a WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  std::vector<std::int16_t> pcm;
  bool have_data = false;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = detail::read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      audio_format = detail::read_u16(in);
      channels = detail::read_u16(in);
      sample_rate = detail::read_u32(in);
      detail::read_u32(in);  // byte rate
      detail::read_u16(in);  // block align
      bits = detail::read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      pcm.resize(chunk_size / 2);
      in.read(reinterpret_cast<char *>(pcm.data()),
              static_cast<std::streamsize>(pcm.size() * 2));
      have_data = true;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
    if (have_fmt && have_data) break;
  }
  if (!have_fmt || !have_data)
    throw std::runtime_error("read_wav: missing fmt/data chunk: " + path);
  if (audio_format != 1)
    throw std::runtime_error("read_wav: unsupported format: non-PCM encoding (format tag " +
                             std::to_string(audio_format) + ")");
  if (channels != 1)
    throw std::runtime_error("read_wav: unsupported format: " +
                             std::to_string(channels) + " channels, expected mono");
  if (bits != 16)
    throw std::runtime_error("read_wav: unsupported format: " +
                             std::to_string(bits) + "-bit samples, expected 16");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(sample_rate);
  w.samples.resize(pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i)
    w.samples[i] = static_cast<double>(pcm[i]) / 32768.0;
  return w;
}

// Writes 16-bit PCM mono. Quantization is round-to-nearest; +1.0 saturates
// to 32767. Amplitudes outside [-1, 1] are an error: callers clamp first.
inline void write_wav(const std::string &path, const Waveform &w) {
  for (double s : w.samples) {
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
      throw std::invalid_argument(
          "write_wav: amplitude out of [-1, 1]; clamp or normalize first");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.size() * 2);
  out.write("RIFF", 4);
  detail::write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_u32(out, 16);
  detail::write_u16(out, 1);  // PCM
  detail::write_u16(out, 1);  // mono
  detail::write_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  detail::write_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz * 2));
  detail::write_u16(out, 2);
  detail::write_u16(out, 16);
  out.write("data", 4);
  detail::write_u32(out, data_bytes);
  for (double s : w.samples) {
    long q = std::lround(s * 32768.0);
    q = std::clamp(q, -32768L, 32767L);
    detail::write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!out) throw std::runtime_error("write_wav: write failed: " + path);
}

inline void clamp_amplitudes(Waveform &w) {
  for (double &s : w.samples) s = std::clamp(s, -1.0, 1.0);
}

}  // namespace advsp

#endif  // ADVSP_AUDIO_HPP
