#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "advsp/ctc.hpp"

using namespace advsp;

namespace {

// Collapse an argmax path: merge repeats, drop blanks.
TokenSeq collapse(const std::vector<int> &path) {
  TokenSeq out;
  int prev = -1;
  for (int id : path) {
    if (id != prev && id != 0) out.push_back(id);
    prev = id;
  }
  return out;
}

// Brute-force CTC oracle: enumerate all |V|^T paths, sum scores of those
// collapsing to the target. Independent of the forward-backward recursion.
double brute_force_ctc_loss(const Eigen::MatrixXd &logits, const TokenSeq &target) {
  const int T = static_cast<int>(logits.rows());
  const int V = static_cast<int>(logits.cols());
  double total = -std::numeric_limits<double>::infinity();
  std::vector<int> path(T, 0);
  const long count = static_cast<long>(std::pow(V, T));
  for (long code = 0; code < count; ++code) {
    long c = code;
    double score = 0.0;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % V);
      c /= V;
      score += logits(t, path[t]);
    }
    if (collapse(path) == target) {
      if (std::isinf(total))
        total = score;
      else {
        const double m = std::max(total, score);
        total = m + std::log1p(std::exp(std::min(total, score) - m));
      }
    }
  }
  return -total;
}

Eigen::MatrixXd uniform_logprob(int T, int V) {
  return Eigen::MatrixXd::Constant(T, V, -std::log(static_cast<double>(V)));
}

}  // namespace

TEST_CASE("ctc_loss single-frame example") {
  Eigen::MatrixXd logits(1, 2);
  logits << std::log(0.5), std::log(0.5);
  CHECK(ctc_loss(logits, {1}) == Catch::Approx(-std::log(0.5)).margin(1e-12));
}

TEST_CASE("ctc_loss two-frame example: paths aa, a-, -a") {
  Eigen::MatrixXd logits = uniform_logprob(2, 2);  // P(a)=P(blank)=0.5
  CHECK(ctc_loss(logits, {1}) == Catch::Approx(-std::log(0.75)).margin(1e-12));
  CHECK(brute_force_ctc_loss(logits, {1}) == Catch::Approx(-std::log(0.75)).margin(1e-12));
}

TEST_CASE("ctc_loss T=3 vocab 3 target ab matches enumeration") {
  Eigen::MatrixXd logits = uniform_logprob(3, 3);
  CHECK(ctc_loss(logits, {1, 2}) ==
        Catch::Approx(brute_force_ctc_loss(logits, {1, 2})).margin(1e-12));
}

TEST_CASE("ctc_loss equals the enumeration oracle on all small cases") {
  std::mt19937_64 eng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int V = 2; V <= 3; ++V) {
    for (int T = 1; T <= 6; ++T) {
      // all targets with |target| <= 2 over non-blank tokens
      std::vector<TokenSeq> targets = {{}};
      for (int a = 1; a < V; ++a) {
        targets.push_back({a});
        for (int b = 1; b < V; ++b) targets.push_back({a, b});
      }
      Eigen::MatrixXd logits(T, V);
      for (int t = 0; t < T; ++t)
        for (int v = 0; v < V; ++v) logits(t, v) = gauss(eng);
      for (const TokenSeq &target : targets) {
        if (target.empty()) continue;
        bool feasible = true;
        int need = static_cast<int>(target.size());
        for (std::size_t i = 1; i < target.size(); ++i)
          if (target[i] == target[i - 1]) ++need;
        feasible = need <= T;
        if (!feasible) {
          CHECK_THROWS_AS(ctc_loss(logits, target), std::invalid_argument);
          continue;
        }
        REQUIRE(ctc_loss(logits, target) ==
                Catch::Approx(brute_force_ctc_loss(logits, target)).margin(1e-9));
      }
    }
  }
}

TEST_CASE("ctc_grad matches central finite differences") {
  std::mt19937_64 eng(29);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd logits(5, 4);
    for (int t = 0; t < 5; ++t)
      for (int v = 0; v < 4; ++v) logits(t, v) = gauss(eng);
    const TokenSeq target = {1 + static_cast<int>(eng() % 3),
                             1 + static_cast<int>(eng() % 3)};
    Eigen::MatrixXd grad = ctc_grad(logits, target);
    for (int t = 0; t < 5; ++t) {
      for (int v = 0; v < 4; ++v) {
        Eigen::MatrixXd plus = logits, minus = logits;
        plus(t, v) += h;
        minus(t, v) -= h;
        const double fd =
            (ctc_loss(plus, target) - ctc_loss(minus, target)) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(grad(t, v)), 1e-6});
        REQUIRE(std::fabs(grad(t, v) - fd) / denom < 1e-4);
      }
    }
  }
}

TEST_CASE("ctc gradient rows sum to zero through a log-softmax") {
  // chain rule: if logits = log_softmax(z), d loss/dz rows sum to 0
  std::mt19937_64 eng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd z(4, 3);
  for (int t = 0; t < 4; ++t)
    for (int v = 0; v < 3; ++v) z(t, v) = gauss(eng);
  Eigen::VectorXd lse =
      (z.colwise() - z.rowwise().maxCoeff()).array().exp().rowwise().sum().log() +
      z.rowwise().maxCoeff().array();
  Eigen::MatrixXd logprob = z.colwise() - lse;
  const TokenSeq target = {1, 2};
  Eigen::MatrixXd g = ctc_grad(logprob, target);
  Eigen::MatrixXd p = logprob.array().exp();
  Eigen::VectorXd rs = g.rowwise().sum();
  Eigen::MatrixXd dz = g - (p.array().colwise() * rs.array()).matrix();
  for (int t = 0; t < 4; ++t)
    REQUIRE(dz.row(t).sum() == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("random logits are not stationary") {
  std::mt19937_64 eng(37);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd logits(6, 4);
    for (int t = 0; t < 6; ++t)
      for (int v = 0; v < 4; ++v) logits(t, v) = gauss(eng);
    REQUIRE(ctc_grad(logits, {1, 2}).norm() > 0.0);
  }
}

TEST_CASE("greedy_decode collapse rules") {
  auto logits_for = [](const std::vector<int> &path, int V) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<int>(path.size()), V);
    for (std::size_t t = 0; t < path.size(); ++t) m(static_cast<int>(t), path[t]) = 5.0;
    return m;
  };
  CHECK(greedy_decode(logits_for({0, 1, 1, 0}, 3)) == TokenSeq{1});
  CHECK(greedy_decode(logits_for({1, 0, 1}, 3)) == TokenSeq({1, 1}));
  CHECK(greedy_decode(logits_for({1, 1}, 3)) == TokenSeq{1});
}

TEST_CASE("infeasible target signals an error") {
  Eigen::MatrixXd logits = uniform_logprob(2, 3);
  CHECK_THROWS_WITH(ctc_loss(logits, {1, 1, 2}),
                    Catch::Matchers::ContainsSubstring("infeasible"));
}

TEST_CASE("vocabulary encode/decode round trip") {
  Vocabulary v = default_vocabulary();
  REQUIRE(v.size() == 28);
  const TokenSeq seq = v.encode("ab z");
  CHECK(v.to_string(seq) == "ab z");
  CHECK_THROWS_AS(v.encode("A!"), std::invalid_argument);
}
