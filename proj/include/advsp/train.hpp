// advsp/train.hpp
// Plain gradient-descent training of the victim with the CTC loss.

#ifndef ADVSP_TRAIN_HPP
#define ADVSP_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advsp/corpus.hpp"
#include "advsp/metrics_edit.hpp"
#include "advsp/victim.hpp"

namespace advsp {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 2e-3;  // Adam step size
  std::uint64_t seed = 1;
  double grad_clip = 5.0;  // global-norm clip, keeps the fixed step stable
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int hidden = 48;
  int kernel = 3;
  // Gaussian feature jitter (in units of the corpus feature std), redrawn
  // every step. The corpus is small enough to memorize outright; this keeps
  // the model on the token signatures instead of the exact renderings.
  double feature_noise = 0.2;
};

struct TrainLogEntry {
  int epoch = 0;
  double mean_loss = 0.0;
};

// Deterministic for a fixed seed: init, shuffle order, and feature
// normalization all derive from cfg.seed.
inline VictimModel train_victim(const Corpus &corpus, const FrontendConfig &fe,
                                const TrainConfig &cfg,
                                std::vector<TrainLogEntry> *log = nullptr) {
  auto train_items = corpus.split(false);
  if (train_items.empty())
    throw std::invalid_argument("train_victim: corpus has no train split");
  const int sr = train_items[0]->wav.sample_rate_hz;

  VictimModel m = init_victim(fe, default_vocabulary(), sr, cfg.seed,
                              cfg.hidden, cfg.kernel);

  // Features are fixed per utterance; compute once.
  LogMelFrontend frontend(fe, sr);
  std::vector<Eigen::MatrixXd> feats;
  feats.reserve(train_items.size());
  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (const CorpusItem *it : train_items) {
    feats.push_back(frontend.forward(it->wav).feats);
    const auto &f = feats.back();
    sum += f.sum();
    sumsq += f.array().square().sum();
    count += static_cast<std::size_t>(f.size());
  }
  m.feat_shift = sum / static_cast<double>(count);
  const double var = sumsq / static_cast<double>(count) - m.feat_shift * m.feat_shift;
  m.feat_scale = std::sqrt(std::max(var, 1e-12));

  auto eng = make_engine(derive_seed(cfg.seed, 0x5eedu));
  std::vector<std::size_t> order(train_items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Adam state
  ParamGrads mom1, mom2;
  mom1.init_zero(m);
  mom2.init_zero(m);
  long step = 0;
  const double eps = 1e-8;
  auto adam_update = [&](Eigen::MatrixXd &w, Eigen::MatrixXd &m1,
                         Eigen::MatrixXd &m2, const Eigen::MatrixXd &g,
                         double lr, double bc1, double bc2) {
    m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * g;
    m2 = cfg.adam_beta2 * m2.array() + (1.0 - cfg.adam_beta2) * g.array().square();
    w.array() -= lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + eps);
  };
  auto adam_update_v = [&](Eigen::VectorXd &w, Eigen::VectorXd &m1,
                           Eigen::VectorXd &m2, const Eigen::VectorXd &g,
                           double lr, double bc1, double bc2) {
    m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * g;
    m2 = cfg.adam_beta2 * m2.array() + (1.0 - cfg.adam_beta2) * g.array().square();
    w.array() -= lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + eps);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), eng);
    const double progress = static_cast<double>(epoch) / cfg.epochs;
    // the step size and the jitter both anneal out over the run so the tail
    // of the loss curve is quiet
    const double lr = cfg.learning_rate / (1.0 + 4.0 * progress);
    const double noise_std =
        cfg.feature_noise * m.feat_scale * (1.0 - progress);
    for (std::size_t idx : order) {
      Eigen::MatrixXd f = feats[idx];
      if (noise_std > 0.0) {
        std::normal_distribution<double> jitter(0.0, noise_std);
        for (Eigen::Index r = 0; r < f.rows(); ++r)
          for (Eigen::Index c = 0; c < f.cols(); ++c) f(r, c) += jitter(eng);
      }
      ForwardCache cache;
      Eigen::MatrixXd logprob = victim_forward(m, f, &cache);
      const TokenSeq &target = train_items[idx]->transcript;
      const double loss = ctc_loss(logprob, target);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_victim: non-finite loss at epoch " +
                                 std::to_string(epoch));
      Eigen::MatrixXd dlogprob = ctc_grad(logprob, target);
      ParamGrads g;
      victim_backward(m, cache, dlogprob, &g);
      double norm = std::sqrt(g.squared_norm());
      if (norm > cfg.grad_clip) g.scale(cfg.grad_clip / norm);
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      adam_update(m.conv1_w, mom1.conv1_w, mom2.conv1_w, g.conv1_w, lr, bc1, bc2);
      adam_update_v(m.conv1_b, mom1.conv1_b, mom2.conv1_b, g.conv1_b, lr, bc1, bc2);
      adam_update(m.conv2_w, mom1.conv2_w, mom2.conv2_w, g.conv2_w, lr, bc1, bc2);
      adam_update_v(m.conv2_b, mom1.conv2_b, mom2.conv2_b, g.conv2_b, lr, bc1, bc2);
      adam_update(m.proj_w, mom1.proj_w, mom2.proj_w, g.proj_w, lr, bc1, bc2);
      adam_update_v(m.proj_b, mom1.proj_b, mom2.proj_b, g.proj_b, lr, bc1, bc2);
    }
    if (log) {
      // end-of-epoch loss on the clean features: the curve tracks the
      // model, not the per-step jitter draws
      double loss_sum = 0.0;
      for (std::size_t idx : order)
        loss_sum += ctc_loss(victim_forward(m, feats[idx]),
                             train_items[idx]->transcript);
      log->push_back({epoch, loss_sum / static_cast<double>(order.size())});
    }
  }
  return m;
}

// Pooled held-out WER in percent (word level over the decoded transcripts).
inline double held_out_wer(const VictimModel &m, const Corpus &corpus) {
  auto held = corpus.split(true);
  if (held.empty()) throw std::invalid_argument("held_out_wer: empty held-out split");
  long d = 0, i = 0, s = 0, n = 0;
  for (const CorpusItem *it : held) {
    const auto ref = split_words(m.vocabulary.to_string(it->transcript));
    const auto hyp = split_words(m.vocabulary.to_string(transcribe(m, it->wav)));
    EditOps ops = word_edit_ops(ref, hyp);
    d += ops.deletions;
    i += ops.insertions;
    s += ops.substitutions;
    n += ops.ref_words;
  }
  if (n == 0) throw std::runtime_error("held_out_wer: empty references");
  return 100.0 * static_cast<double>(d + i + s) / static_cast<double>(n);
}

}  // namespace advsp

#endif  // ADVSP_TRAIN_HPP
