// advsp/ctc.hpp
// CTC loss, gradient, and greedy decoding over per-frame log-probabilities.
// The forward-backward recursions treat matrix entries as log-scores, so the
// loss is well defined (and finite-difference checkable) for any real matrix.

#ifndef ADVSP_CTC_HPP
#define ADVSP_CTC_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace advsp {

using TokenSeq = std::vector<int>;

struct Vocabulary {
  // Index 0 is the CTC blank.
  std::vector<char> tokens;

  int size() const { return static_cast<int>(tokens.size()); }

  std::string to_string(const TokenSeq &seq) const {
    std::string s;
    for (int id : seq) {
      if (id <= 0 || id >= size())
        throw std::invalid_argument("vocabulary: invalid token id");
      s.push_back(tokens[id]);
    }
    return s;
  }

  TokenSeq encode(const std::string &s) const {
    TokenSeq seq;
    for (char c : s) {
      auto it = std::find(tokens.begin() + 1, tokens.end(), c);
      if (it == tokens.end())
        throw std::invalid_argument(std::string("vocabulary: unknown character '") + c + "'");
      seq.push_back(static_cast<int>(it - tokens.begin()));
    }
    return seq;
  }
};

// blank + a..z + space.
inline Vocabulary default_vocabulary() {
  Vocabulary v;
  v.tokens.push_back('\0');
  for (char c = 'a'; c <= 'z'; ++c) v.tokens.push_back(c);
  v.tokens.push_back(' ');
  return v;
}

namespace detail {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Blank-augmented label sequence: blank, l1, blank, l2, ..., blank.
inline std::vector<int> augment_target(const TokenSeq &target) {
  std::vector<int> ext(2 * target.size() + 1, 0);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

// Minimum frame count admitting any alignment: |target| plus one frame per
// repeated adjacent pair (a blank must separate them).
inline int min_frames_for(const TokenSeq &target) {
  int n = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

struct CtcTables {
  Eigen::MatrixXd alpha;  // T x S, log domain, emission at t included
  Eigen::MatrixXd beta;   // T x S, log domain, emission at t included
  double log_prob = kLogZero;
  std::vector<int> ext;
};

inline CtcTables ctc_forward_backward(const Eigen::MatrixXd &logits,
                                      const TokenSeq &target) {
  const int T = static_cast<int>(logits.rows());
  const int V = static_cast<int>(logits.cols());
  for (int id : target)
    if (id <= 0 || id >= V)
      throw std::invalid_argument("ctc: token id out of range");
  if (T < 1) throw std::invalid_argument("ctc: empty logit matrix");
  if (min_frames_for(target) > T)
    throw std::invalid_argument("ctc: infeasible alignment, target too long for " +
                                std::to_string(T) + " frames");

  CtcTables tb;
  tb.ext = augment_target(target);
  const int S = static_cast<int>(tb.ext.size());
  tb.alpha = Eigen::MatrixXd::Constant(T, S, kLogZero);
  tb.beta = Eigen::MatrixXd::Constant(T, S, kLogZero);

  tb.alpha(0, 0) = logits(0, tb.ext[0]);
  if (S > 1) tb.alpha(0, 1) = logits(0, tb.ext[1]);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = tb.alpha(t - 1, s);
      if (s >= 1) a = log_add(a, tb.alpha(t - 1, s - 1));
      if (s >= 2 && tb.ext[s] != 0 && tb.ext[s] != tb.ext[s - 2])
        a = log_add(a, tb.alpha(t - 1, s - 2));
      tb.alpha(t, s) = (a == kLogZero) ? kLogZero : a + logits(t, tb.ext[s]);
    }
  }

  tb.beta(T - 1, S - 1) = logits(T - 1, tb.ext[S - 1]);
  if (S > 1) tb.beta(T - 1, S - 2) = logits(T - 1, tb.ext[S - 2]);
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double b = tb.beta(t + 1, s);
      if (s + 1 < S) b = log_add(b, tb.beta(t + 1, s + 1));
      if (s + 2 < S && tb.ext[s + 2] != 0 && tb.ext[s + 2] != tb.ext[s])
        b = log_add(b, tb.beta(t + 1, s + 2));
      tb.beta(t, s) = (b == kLogZero) ? kLogZero : b + logits(t, tb.ext[s]);
    }
  }

  double lp = tb.alpha(T - 1, S - 1);
  if (S > 1) lp = log_add(lp, tb.alpha(T - 1, S - 2));
  tb.log_prob = lp;
  return tb;
}

}  // namespace detail

// -log of the total score of all alignments collapsing to the target.
inline double ctc_loss(const Eigen::MatrixXd &logits, const TokenSeq &target) {
  return -detail::ctc_forward_backward(logits, target).log_prob;
}

// Exact gradient of ctc_loss with respect to every logit entry:
// d(-log P)/d logits[t][k] = -sum_{s: ext[s]=k} exp(alpha+beta-logit-logP).
inline Eigen::MatrixXd ctc_grad(const Eigen::MatrixXd &logits,
                                const TokenSeq &target) {
  detail::CtcTables tb = detail::ctc_forward_backward(logits, target);
  const int T = static_cast<int>(logits.rows());
  const int S = static_cast<int>(tb.ext.size());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(T, logits.cols());
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ab = tb.alpha(t, s) + tb.beta(t, s);
      if (ab == detail::kLogZero) continue;
      grad(t, tb.ext[s]) -=
          std::exp(ab - logits(t, tb.ext[s]) - tb.log_prob);
    }
  }
  return grad;
}

// Per-frame argmax, collapse repeats, drop blanks.
inline TokenSeq greedy_decode(const Eigen::MatrixXd &logits) {
  TokenSeq out;
  int prev = -1;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    Eigen::Index k;
    logits.row(t).maxCoeff(&k);
    const int id = static_cast<int>(k);
    if (id != prev && id != 0) out.push_back(id);
    prev = id;
  }
  return out;
}

}  // namespace advsp

#endif  // ADVSP_CTC_HPP
