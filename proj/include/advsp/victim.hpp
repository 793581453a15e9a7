// advsp/victim.hpp
// Desk-scale differentiable CTC victim: two temporal convolution layers with
// tanh nonlinearities, a linear projection to per-frame log-probabilities,
// and exact backward passes to both parameters and the input waveform.

#ifndef ADVSP_VICTIM_HPP
#define ADVSP_VICTIM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advsp/audio.hpp"
#include "advsp/ctc.hpp"
#include "advsp/frontend.hpp"
#include "advsp/rng.hpp"

namespace advsp {

struct VictimModel {
  FrontendConfig frontend;
  Vocabulary vocabulary;
  int sample_rate_hz = 16000;
  int hidden = 48;
  int kernel = 5;  // odd, same padding
  std::uint64_t training_seed = 0;

  // Fixed affine feature normalization, estimated once at training start.
  double feat_shift = 0.0;
  double feat_scale = 1.0;

  // conv weights are laid out (out, in*kernel) in im2col order.
  Eigen::MatrixXd conv1_w, conv2_w, proj_w;
  Eigen::VectorXd conv1_b, conv2_b, proj_b;

  int vocab_size() const { return vocabulary.size(); }
};

inline VictimModel init_victim(const FrontendConfig &fe, const Vocabulary &vocab,
                               int sample_rate_hz, std::uint64_t seed,
                               int hidden = 48, int kernel = 5) {
  VictimModel m;
  m.frontend = fe;
  m.vocabulary = vocab;
  m.sample_rate_hz = sample_rate_hz;
  m.hidden = hidden;
  m.kernel = kernel;
  m.training_seed = seed;
  auto eng = make_engine(mix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto fill = [&](Eigen::MatrixXd &w, int rows, int cols, double gain) {
    w.resize(rows, cols);
    const double scale = gain / std::sqrt(static_cast<double>(cols));
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = gauss(eng) * scale;
  };
  fill(m.conv1_w, hidden, fe.num_mels * kernel, 1.0);
  fill(m.conv2_w, hidden, hidden * kernel, 1.0);
  // small output head: fresh models start close to uniform over the vocab
  fill(m.proj_w, vocab.size(), hidden, 0.25);
  m.conv1_b = Eigen::VectorXd::Zero(hidden);
  m.conv2_b = Eigen::VectorXd::Zero(hidden);
  m.proj_b = Eigen::VectorXd::Zero(vocab.size());
  return m;
}

namespace detail {

// Unrolls a (frames x ch) matrix into (frames x ch*kernel) with zero padding
// so a temporal convolution becomes one GEMM.
inline Eigen::MatrixXd im2col(const Eigen::MatrixXd &x, int kernel) {
  const int T = static_cast<int>(x.rows());
  const int C = static_cast<int>(x.cols());
  const int half = kernel / 2;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(T, C * kernel);
  for (int d = 0; d < kernel; ++d) {
    const int shift = d - half;
    const int t0 = std::max(0, -shift);
    const int t1 = std::min(T, T - shift);
    if (t1 > t0)
      u.block(t0, d * C, t1 - t0, C) = x.block(t0 + shift, 0, t1 - t0, C);
  }
  return u;
}

// Transpose of im2col: scatters (frames x ch*kernel) gradients back.
inline Eigen::MatrixXd col2im(const Eigen::MatrixXd &du, int kernel, int C) {
  const int T = static_cast<int>(du.rows());
  const int half = kernel / 2;
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(T, C);
  for (int d = 0; d < kernel; ++d) {
    const int shift = d - half;
    const int t0 = std::max(0, -shift);
    const int t1 = std::min(T, T - shift);
    if (t1 > t0)
      dx.block(t0 + shift, 0, t1 - t0, C) += du.block(t0, d * C, t1 - t0, C);
  }
  return dx;
}

}  // namespace detail

struct ForwardCache {
  Eigen::MatrixXd feats_norm;       // frames x mels
  Eigen::MatrixXd u1, h1, u2, h2;   // im2col inputs and tanh outputs
  Eigen::MatrixXd logprob;          // frames x V
};

// Per-frame log-probabilities (each row log-sum-exps to 0).
inline Eigen::MatrixXd victim_forward(const VictimModel &m,
                                      const Eigen::MatrixXd &feats,
                                      ForwardCache *cache = nullptr) {
  if (feats.cols() != m.frontend.num_mels)
    throw std::invalid_argument("victim_forward: feature width mismatch");
  ForwardCache local;
  ForwardCache &c = cache ? *cache : local;
  c.feats_norm = (feats.array() - m.feat_shift) / m.feat_scale;
  c.u1 = detail::im2col(c.feats_norm, m.kernel);
  c.h1 = ((c.u1 * m.conv1_w.transpose()).rowwise() + m.conv1_b.transpose())
             .array()
             .tanh();
  c.u2 = detail::im2col(c.h1, m.kernel);
  c.h2 = ((c.u2 * m.conv2_w.transpose()).rowwise() + m.conv2_b.transpose())
             .array()
             .tanh();
  Eigen::MatrixXd z =
      (c.h2 * m.proj_w.transpose()).rowwise() + m.proj_b.transpose();
  // log-softmax per row
  Eigen::VectorXd mx = z.rowwise().maxCoeff();
  Eigen::MatrixXd sh = z.colwise() - mx;
  Eigen::VectorXd lse = sh.array().exp().rowwise().sum().log();
  c.logprob = sh.colwise() - lse;
  return c.logprob;
}

struct ParamGrads {
  Eigen::MatrixXd conv1_w, conv2_w, proj_w;
  Eigen::VectorXd conv1_b, conv2_b, proj_b;

  double squared_norm() const {
    return conv1_w.squaredNorm() + conv2_w.squaredNorm() + proj_w.squaredNorm() +
           conv1_b.squaredNorm() + conv2_b.squaredNorm() + proj_b.squaredNorm();
  }

  void init_zero(const VictimModel &m) {
    conv1_w = Eigen::MatrixXd::Zero(m.conv1_w.rows(), m.conv1_w.cols());
    conv2_w = Eigen::MatrixXd::Zero(m.conv2_w.rows(), m.conv2_w.cols());
    proj_w = Eigen::MatrixXd::Zero(m.proj_w.rows(), m.proj_w.cols());
    conv1_b = Eigen::VectorXd::Zero(m.conv1_b.size());
    conv2_b = Eigen::VectorXd::Zero(m.conv2_b.size());
    proj_b = Eigen::VectorXd::Zero(m.proj_b.size());
  }

  void scale(double s) {
    conv1_w *= s;
    conv2_w *= s;
    proj_w *= s;
    conv1_b *= s;
    conv2_b *= s;
    proj_b *= s;
  }
};

// Backward through the network. dlogprob is d loss / d logprob; returns
// d loss / d feats and, when grads is non-null, accumulates parameter grads.
inline Eigen::MatrixXd victim_backward(const VictimModel &m,
                                       const ForwardCache &c,
                                       const Eigen::MatrixXd &dlogprob,
                                       ParamGrads *grads = nullptr) {
  // Through log-softmax: dz = dlp - softmax * rowsum(dlp).
  Eigen::MatrixXd p = c.logprob.array().exp();
  Eigen::VectorXd rs = dlogprob.rowwise().sum();
  Eigen::MatrixXd dz = dlogprob - (p.array().colwise() * rs.array()).matrix();

  Eigen::MatrixXd dh2 = dz * m.proj_w;
  Eigen::MatrixXd da2 = dh2.array() * (1.0 - c.h2.array().square());
  Eigen::MatrixXd du2 = da2 * m.conv2_w;
  Eigen::MatrixXd dh1 = detail::col2im(du2, m.kernel, m.hidden);
  Eigen::MatrixXd da1 = dh1.array() * (1.0 - c.h1.array().square());
  Eigen::MatrixXd du1 = da1 * m.conv1_w;
  Eigen::MatrixXd dfeats_norm =
      detail::col2im(du1, m.kernel, m.frontend.num_mels);

  if (grads) {
    grads->proj_w = dz.transpose() * c.h2;
    grads->proj_b = dz.colwise().sum();
    grads->conv2_w = da2.transpose() * c.u2;
    grads->conv2_b = da2.colwise().sum();
    grads->conv1_w = da1.transpose() * c.u1;
    grads->conv1_b = da1.colwise().sum();
  }
  return dfeats_norm / m.feat_scale;
}

inline Eigen::MatrixXd victim_logits(const VictimModel &m, const Waveform &w) {
  LogMelFrontend fe(m.frontend, m.sample_rate_hz);
  return victim_forward(m, fe.forward(w).feats);
}

inline TokenSeq transcribe(const VictimModel &m, const Waveform &w) {
  return greedy_decode(victim_logits(m, w));
}

// d ctc_loss(target) / d waveform: ctc_grad -> network backward -> frontend
// backward, every link the exact transpose of its forward.
inline std::vector<double> input_gradient(const VictimModel &m,
                                          const Waveform &w,
                                          const TokenSeq &target,
                                          double *loss_out = nullptr) {
  LogMelFrontend fe(m.frontend, m.sample_rate_hz);
  LogMelFrontend::Computation fc = fe.forward(w);
  ForwardCache cache;
  Eigen::MatrixXd logprob = victim_forward(m, fc.feats, &cache);
  if (loss_out) *loss_out = ctc_loss(logprob, target);
  Eigen::MatrixXd dlogprob = ctc_grad(logprob, target);
  Eigen::MatrixXd dfeats = victim_backward(m, cache, dlogprob);
  return fe.backward(fc, dfeats);
}

// --- checkpoint serialization (versioned binary, bit-exact round trip) ---

namespace detail {

constexpr char kModelMagic[8] = {'A', 'D', 'V', 'S', 'P', 'M', '0', '1'};

inline void put_i64(std::ostream &o, std::int64_t v) {
  o.write(reinterpret_cast<const char *>(&v), 8);
}
inline std::int64_t get_i64(std::istream &i) {
  std::int64_t v;
  i.read(reinterpret_cast<char *>(&v), 8);
  return v;
}
inline void put_f64(std::ostream &o, double v) {
  o.write(reinterpret_cast<const char *>(&v), 8);
}
inline double get_f64(std::istream &i) {
  double v;
  i.read(reinterpret_cast<char *>(&v), 8);
  return v;
}
inline void put_mat(std::ostream &o, const Eigen::MatrixXd &m) {
  put_i64(o, m.rows());
  put_i64(o, m.cols());
  o.write(reinterpret_cast<const char *>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
}
inline Eigen::MatrixXd get_mat(std::istream &i) {
  const std::int64_t r = get_i64(i), c = get_i64(i);
  Eigen::MatrixXd m(r, c);
  i.read(reinterpret_cast<char *>(m.data()),
         static_cast<std::streamsize>(sizeof(double) * m.size()));
  return m;
}

}  // namespace detail

inline void save_victim(const std::string &path, const VictimModel &m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_victim: cannot open " + path);
  out.write(detail::kModelMagic, 8);
  detail::put_i64(out, m.frontend.frame_len);
  detail::put_i64(out, m.frontend.hop_len);
  detail::put_i64(out, m.frontend.num_mels);
  detail::put_i64(out, m.frontend.dft_size);
  detail::put_f64(out, m.frontend.log_floor);
  detail::put_i64(out, m.sample_rate_hz);
  detail::put_i64(out, m.hidden);
  detail::put_i64(out, m.kernel);
  detail::put_i64(out, static_cast<std::int64_t>(m.training_seed));
  detail::put_f64(out, m.feat_shift);
  detail::put_f64(out, m.feat_scale);
  detail::put_i64(out, m.vocabulary.size());
  out.write(m.vocabulary.tokens.data(), m.vocabulary.size());
  detail::put_mat(out, m.conv1_w);
  detail::put_mat(out, m.conv2_w);
  detail::put_mat(out, m.proj_w);
  detail::put_mat(out, m.conv1_b);
  detail::put_mat(out, m.conv2_b);
  detail::put_mat(out, m.proj_b);
  if (!out) throw std::runtime_error("save_victim: write failed: " + path);
}

inline VictimModel load_victim(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_victim: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kModelMagic, 8) != 0)
    throw std::runtime_error("load_victim: bad checkpoint header: " + path);
  VictimModel m;
  m.frontend.frame_len = static_cast<int>(detail::get_i64(in));
  m.frontend.hop_len = static_cast<int>(detail::get_i64(in));
  m.frontend.num_mels = static_cast<int>(detail::get_i64(in));
  m.frontend.dft_size = static_cast<int>(detail::get_i64(in));
  m.frontend.log_floor = detail::get_f64(in);
  m.sample_rate_hz = static_cast<int>(detail::get_i64(in));
  m.hidden = static_cast<int>(detail::get_i64(in));
  m.kernel = static_cast<int>(detail::get_i64(in));
  m.training_seed = static_cast<std::uint64_t>(detail::get_i64(in));
  m.feat_shift = detail::get_f64(in);
  m.feat_scale = detail::get_f64(in);
  const int vs = static_cast<int>(detail::get_i64(in));
  m.vocabulary.tokens.resize(vs);
  in.read(m.vocabulary.tokens.data(), vs);
  m.conv1_w = detail::get_mat(in);
  m.conv2_w = detail::get_mat(in);
  m.proj_w = detail::get_mat(in);
  m.conv1_b = detail::get_mat(in);
  m.conv2_b = detail::get_mat(in);
  m.proj_b = detail::get_mat(in);
  if (!in) throw std::runtime_error("load_victim: truncated checkpoint: " + path);
  return m;
}

}  // namespace advsp

#endif  // ADVSP_VICTIM_HPP
