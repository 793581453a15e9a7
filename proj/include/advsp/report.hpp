// advsp/report.hpp
// Batch aggregation of attack-success and quality metrics into the summary
// row shape: WER +/- std | SLA +/- std | segSNR | STOI | LLR | n_ota.

#ifndef ADVSP_REPORT_HPP
#define ADVSP_REPORT_HPP

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "advsp/metrics_edit.hpp"

namespace advsp {

struct SampleMetrics {
  std::string id;
  double wer_pct = 0.0;          // hypothesis vs. ground-truth reference
  bool hit_exact_target = false;
  double seg_snr_db = 0.0;
  double stoi_score = 0.0;
  double llr_score = 0.0;
  int n_ota = 0;
  EditOps edit_ops;              // pooled-WER accounting
};

struct QualityReport {
  double wer_pct = 0.0;          // mean of per-sample WERs (headline: pooled below)
  double wer_std = 0.0;
  double wer_pooled_pct = 0.0;   // corpus-level pooled edit counts
  double sla_pct = 0.0;
  double sla_std = 0.0;
  double seg_snr_db = 0.0;
  double stoi_score = 0.0;
  double llr_score = 0.0;
  double n_ota_mean = 0.0;
  std::size_t sample_count = 0;
  std::vector<SampleMetrics> samples;
};

namespace detail {

inline void mean_std(const std::vector<double> &v, double *mean, double *sd) {
  double s = 0.0;
  for (double x : v) s += x;
  *mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - *mean) * (x - *mean);
  *sd = (v.size() > 1) ? std::sqrt(ss / static_cast<double>(v.size())) : 0.0;
}

}  // namespace detail

inline QualityReport build_report(std::vector<SampleMetrics> samples) {
  if (samples.empty()) throw std::invalid_argument("build_report: empty batch");
  QualityReport r;
  r.sample_count = samples.size();

  std::vector<double> wers, slas;
  long pooled_ops = 0, pooled_n = 0;
  double seg = 0.0, st = 0.0, ll = 0.0, nota = 0.0;
  for (const auto &s : samples) {
    wers.push_back(s.wer_pct);
    slas.push_back(s.hit_exact_target ? 100.0 : 0.0);
    pooled_ops += s.edit_ops.total();
    pooled_n += s.edit_ops.ref_words;
    seg += s.seg_snr_db;
    st += s.stoi_score;
    ll += s.llr_score;
    nota += s.n_ota;
  }
  detail::mean_std(wers, &r.wer_pct, &r.wer_std);
  detail::mean_std(slas, &r.sla_pct, &r.sla_std);
  r.wer_pooled_pct =
      (pooled_n > 0)
          ? 100.0 * static_cast<double>(pooled_ops) / static_cast<double>(pooled_n)
          : 0.0;
  const double n = static_cast<double>(samples.size());
  r.seg_snr_db = seg / n;
  r.stoi_score = st / n;
  r.llr_score = ll / n;
  r.n_ota_mean = nota / n;
  r.samples = std::move(samples);
  return r;
}

// CSV layout: one row per sample, then one aggregate row per mode, columns
// in the summary-table order.
inline void write_report_csv(std::ostream &out,
                             const std::vector<std::pair<std::string, QualityReport>> &reports) {
  out.precision(17);
  out << "row,mode,id,wer_pct,wer_std,sla_pct,sla_std,seg_snr_db,stoi,llr,n_ota\n";
  for (const auto &[mode, rep] : reports) {
    for (const auto &s : rep.samples) {
      out << "sample," << mode << "," << s.id << "," << s.wer_pct << ",,"
          << (s.hit_exact_target ? 100.0 : 0.0) << ",," << s.seg_snr_db << ","
          << s.stoi_score << "," << s.llr_score << "," << s.n_ota << "\n";
    }
    out << "aggregate," << mode << ",," << rep.wer_pct << "," << rep.wer_std
        << "," << rep.sla_pct << "," << rep.sla_std << "," << rep.seg_snr_db
        << "," << rep.stoi_score << "," << rep.llr_score << ","
        << rep.n_ota_mean << "\n";
  }
}

// Re-parses the aggregate rows written above (per-sample edit-op counts are
// not round-tripped through the CSV).
inline std::vector<std::pair<std::string, QualityReport>> parse_report_csv(
    std::istream &in) {
  std::vector<std::pair<std::string, QualityReport>> out;
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, std::vector<SampleMetrics>> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    cols.resize(11);
    if (cols[0] == "sample") {
      SampleMetrics s;
      s.id = cols[2];
      s.wer_pct = std::stod(cols[3]);
      s.hit_exact_target = std::stod(cols[5]) > 50.0;
      s.seg_snr_db = std::stod(cols[7]);
      s.stoi_score = std::stod(cols[8]);
      s.llr_score = std::stod(cols[9]);
      s.n_ota = static_cast<int>(std::stod(cols[10]));
      samples[cols[1]].push_back(std::move(s));
    } else if (cols[0] == "aggregate") {
      QualityReport rep;
      rep.wer_pct = std::stod(cols[3]);
      rep.wer_std = std::stod(cols[4]);
      rep.sla_pct = std::stod(cols[5]);
      rep.sla_std = std::stod(cols[6]);
      rep.seg_snr_db = std::stod(cols[7]);
      rep.stoi_score = std::stod(cols[8]);
      rep.llr_score = std::stod(cols[9]);
      rep.n_ota_mean = std::stod(cols[10]);
      rep.samples = std::move(samples[cols[1]]);
      rep.sample_count = rep.samples.size();
      out.emplace_back(cols[1], std::move(rep));
    }
  }
  return out;
}

}  // namespace advsp

#endif  // ADVSP_REPORT_HPP
