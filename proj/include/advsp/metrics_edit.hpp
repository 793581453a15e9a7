// advsp/metrics_edit.hpp
// Word-level edit operations, WER, and SLA.

#ifndef ADVSP_METRICS_EDIT_HPP
#define ADVSP_METRICS_EDIT_HPP

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

namespace advsp {

struct EditOps {
  long deletions = 0;
  long insertions = 0;
  long substitutions = 0;
  long ref_words = 0;

  long total() const { return deletions + insertions + substitutions; }
};

// Whitespace split, lowercase. Transcripts come from a controlled
// vocabulary, so no punctuation handling.
inline std::vector<std::string> split_words(const std::string &text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) words.push_back(cur), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

// Levenshtein alignment with unit costs. Backtrace tie-break prefers
// substitution over insertion over deletion.
inline EditOps word_edit_ops(const std::vector<std::string> &ref,
                             const std::vector<std::string> &hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<long>> d(n + 1, std::vector<long>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const long ins = d[i][j - 1] + 1;
      const long del = d[i - 1][j] + 1;
      d[i][j] = std::min({sub, ins, del});
    }
  }
  EditOps ops;
  ops.ref_words = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++ops.substitutions;
      --i, --j;
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      ++ops.insertions;
      --j;
    } else {
      ++ops.deletions;
      --i;
    }
  }
  return ops;
}

// WER = (D+I+S)/N * 100; deliberately not clamped at 100.
inline double wer(const std::vector<std::string> &ref,
                  const std::vector<std::string> &hyp) {
  if (ref.empty())
    throw std::invalid_argument("wer: empty reference, rate undefined");
  EditOps ops = word_edit_ops(ref, hyp);
  return 100.0 * static_cast<double>(ops.total()) /
         static_cast<double>(ops.ref_words);
}

// Sentence-level accuracy: exact-target hits over total, in percent.
inline double sla(const std::vector<bool> &hit_exact_target) {
  if (hit_exact_target.empty()) throw std::invalid_argument("sla: empty batch");
  long hits = 0;
  for (bool h : hit_exact_target) hits += h ? 1 : 0;
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(hit_exact_target.size());
}

}  // namespace advsp

#endif  // ADVSP_METRICS_EDIT_HPP
