// advsp command-line harness: victim training, batch attacks, over-the-air
// robustness evaluation, metric reporting, and standalone playback.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "advsp/advsp.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string out_dir_flag;
};

advsp::KeyValueConfig load_config(const CommonArgs &args) {
  advsp::KeyValueConfig cfg;
  if (!args.config_path.empty())
    cfg = advsp::KeyValueConfig::from_file(args.config_path);
  for (const auto &kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.out_dir_flag.empty()) cfg.set("out_dir", args.out_dir_flag);
  return cfg;
}

advsp::Corpus build_corpus(const advsp::KeyValueConfig &cfg) {
  const std::string source = cfg.get("corpus", "synthetic");
  if (source == "synthetic") {
    advsp::SynthConfig sc;
    sc.num_utterances = static_cast<int>(cfg.get_long("num_utterances", 50));
    sc.phrase_len_min = static_cast<int>(cfg.get_long("phrase_len_min", 3));
    sc.phrase_len_max = static_cast<int>(cfg.get_long("phrase_len_max", 6));
    sc.seed = cfg.get_u64("corpus_seed", cfg.get_u64("seed", 1));
    return advsp::synth_corpus(sc, advsp::default_vocabulary());
  }
  if (source.rfind("manifest:", 0) == 0) {
    const std::string path = source.substr(9);
    if (!fs::exists(path))
      throw std::runtime_error("corpus manifest not found: " + path);
    return advsp::load_manifest(path, advsp::default_vocabulary());
  }
  throw std::runtime_error("config: corpus must be synthetic or manifest:<path>");
}

int cmd_train(const CommonArgs &args) {
  const auto cfg = load_config(args);
  const std::string out_dir = advsp::resolve_out_dir(cfg);
  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  advsp::Corpus corpus = build_corpus(cfg);
  advsp::FrontendConfig fe;
  fe.num_mels = static_cast<int>(cfg.get_long("num_mels", 40));
  advsp::TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.get_long("epochs", 200));
  tc.learning_rate = cfg.get_double("learning_rate", tc.learning_rate);
  tc.seed = cfg.get_u64("train_seed", cfg.get_u64("seed", 1));
  tc.hidden = static_cast<int>(cfg.get_long("hidden", 48));
  tc.kernel = static_cast<int>(cfg.get_long("kernel", tc.kernel));
  tc.feature_noise = cfg.get_double("feature_noise", tc.feature_noise);

  std::vector<advsp::TrainLogEntry> log;
  advsp::VictimModel model = advsp::train_victim(corpus, fe, tc, &log);

  const std::string ckpt = cfg.get("checkpoint", out_dir + "/victim.bin");
  advsp::save_victim(ckpt, model);

  std::ofstream tlog(out_dir + "/train_log.txt");
  tlog.precision(17);
  for (const auto &e : log) tlog << "epoch " << e.epoch << " loss " << e.mean_loss << "\n";

  const double wer_pct = advsp::held_out_wer(model, corpus);
  std::cout << "checkpoint: " << ckpt << "\n";
  std::cout << "held-out WER: " << wer_pct << "%\n";
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  std::cerr << "train wall-clock: " << dt.count() << " s\n";
  return 0;
}

std::vector<advsp::AttackMode> parse_modes(const advsp::KeyValueConfig &cfg) {
  std::vector<advsp::AttackMode> modes;
  std::stringstream ss(cfg.get("modes", "cramer,cw"));
  std::string m;
  while (std::getline(ss, m, ',')) {
    if (m == "cramer")
      modes.push_back(advsp::AttackMode::kCramer);
    else if (m == "cw")
      modes.push_back(advsp::AttackMode::kCw);
    else if (!m.empty())
      throw std::runtime_error("config: unknown attack mode '" + m + "'");
  }
  if (modes.empty()) throw std::runtime_error("config: at least one attack mode required");
  return modes;
}

const char *mode_name(advsp::AttackMode m) {
  return m == advsp::AttackMode::kCramer ? "cramer" : "cw";
}

const char *outcome_name(advsp::AttackOutcome o) {
  switch (o) {
    case advsp::AttackOutcome::kHitTarget: return "hit_target";
    case advsp::AttackOutcome::kChangedButMissed: return "changed_but_missed";
    default: return "failed";
  }
}

int cmd_attack(const CommonArgs &args) {
  const auto cfg = load_config(args);
  const std::string out_dir = advsp::resolve_out_dir(cfg);
  fs::create_directories(out_dir);
  const std::string cfg_hash = advsp::hex64(advsp::fnv1a64(cfg.canonical()));
  const auto t0 = std::chrono::steady_clock::now();

  const std::string ckpt = cfg.get("checkpoint", out_dir + "/victim.bin");
  if (!fs::exists(ckpt))
    throw std::runtime_error("checkpoint not found: " + ckpt);
  advsp::VictimModel model = advsp::load_victim(ckpt);
  advsp::Corpus corpus = build_corpus(cfg);
  const std::uint64_t master_seed = cfg.get_u64("seed", 1);

  // Pooled original-corpus amplitude reference for the IPM.
  std::vector<const std::vector<double> *> sets;
  for (const auto &it : corpus.items) sets.push_back(&it.wav.samples);
  const std::size_t cap =
      static_cast<std::size_t>(cfg.get_long("reference_size_cap", 1 << 16));
  advsp::EmpiricalDistribution reference =
      advsp::pooled_reference(sets, cap, master_seed);

  // Attack the held-out split (fall back to everything when absent).
  std::vector<const advsp::CorpusItem *> pool = corpus.split(true);
  if (pool.empty())
    for (const auto &it : corpus.items) pool.push_back(&it);
  const int num_samples =
      std::min<long>(cfg.get_long("attack_samples", static_cast<long>(pool.size())),
                     static_cast<long>(pool.size()));

  // Targets: explicit comma-separated phrases or nontargeted:<count>.
  const std::string targets_spec = cfg.get("targets", "nontargeted:1");
  std::vector<std::string> explicit_targets;
  int nontargeted_count = 0;
  if (targets_spec.rfind("nontargeted:", 0) == 0) {
    nontargeted_count = std::stoi(targets_spec.substr(12));
  } else {
    std::stringstream ss(targets_spec);
    std::string t;
    while (std::getline(ss, t, ',')) explicit_targets.push_back(t);
  }

  const auto modes = parse_modes(cfg);
  advsp::RunManifest manifest;
  manifest.config_hash = cfg_hash;
  int attacks_run = 0, skipped = 0;

  for (int si = 0; si < num_samples; ++si) {
    const advsp::CorpusItem &item = *pool[si];
    const std::string org_name = "s" + std::to_string(si) + "_org.wav";
    advsp::write_wav(out_dir + "/" + org_name, item.wav);
    manifest.files.push_back(org_name);

    const int target_count =
        nontargeted_count > 0 ? nontargeted_count
                              : static_cast<int>(explicit_targets.size());
    for (int ti = 0; ti < target_count; ++ti) {
      advsp::TokenSeq target;
      if (nontargeted_count > 0) {
        target = advsp::pick_nontargeted(
            item.transcript, model.vocabulary,
            advsp::derive_seed(master_seed, 1000003ull * si + ti));
      } else {
        target = model.vocabulary.encode(explicit_targets[ti]);
      }
      for (advsp::AttackMode mode : modes) {
        const std::string stem = "s" + std::to_string(si) + "_t" +
                                 std::to_string(ti) + "_" + mode_name(mode);
        const std::string rec_path = out_dir + "/" + stem + ".json";
        const std::string wav_path = out_dir + "/" + stem + ".wav";
        manifest.files.push_back(stem + ".json");
        manifest.files.push_back(stem + ".wav");

        if (fs::exists(rec_path) && fs::exists(wav_path)) {
          std::ifstream rin(rec_path);
          json existing = json::parse(rin, nullptr, false);
          if (!existing.is_discarded() &&
              existing.value("config_hash", "") == cfg_hash) {
            ++skipped;
            continue;  // completed under the same config
          }
        }

        advsp::AttackConfig acfg = advsp::attack_config_from(
            cfg, mode, advsp::derive_seed(master_seed, 2000003ull * si + ti));
        advsp::AttackResult res =
            advsp::attack(model, item.wav, target, reference, acfg);
        ++attacks_run;

        advsp::Waveform to_write = res.x_adv;
        advsp::clamp_amplitudes(to_write);
        advsp::write_wav(wav_path, to_write);

        json rec;
        rec["config_hash"] = cfg_hash;
        rec["sample_index"] = si;
        rec["target_index"] = ti;
        rec["mode"] = mode_name(mode);
        rec["org_wav"] = org_name;
        rec["adv_wav"] = stem + ".wav";
        rec["ground_truth"] = model.vocabulary.to_string(item.transcript);
        rec["target"] = model.vocabulary.to_string(target);
        rec["transcript_before"] = model.vocabulary.to_string(res.transcript_before);
        rec["transcript_after"] = model.vocabulary.to_string(res.transcript_after);
        rec["success"] = outcome_name(res.success);
        rec["final_distortion_db"] = std::isinf(res.final_distortion_db)
                                         ? json(nullptr)
                                         : json(res.final_distortion_db);
        rec["final_cramer2"] = res.final_cramer2;
        rec["outer_iters"] = res.outer_iters;
        rec["inner_iters_total"] = res.inner_iters_total;
        std::ofstream rout(rec_path);
        rout << rec.dump(2) << "\n";
      }
    }
  }
  manifest.files.push_back("manifest.txt");
  manifest.save(out_dir + "/manifest.txt");
  std::cout << "attacks run: " << attacks_run << ", skipped (resumed): "
            << skipped << "\n";
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  std::cerr << "attack wall-clock: " << dt.count() << " s\n";
  return 0;
}

int cmd_evaluate(const CommonArgs &args) {
  const auto cfg = load_config(args);
  const std::string out_dir = advsp::resolve_out_dir(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  const std::string ckpt = cfg.get("checkpoint", out_dir + "/victim.bin");
  if (!fs::exists(ckpt))
    throw std::runtime_error("checkpoint not found: " + ckpt);
  advsp::VictimModel model = advsp::load_victim(ckpt);
  const std::uint64_t master_seed = cfg.get_u64("seed", 1);
  const int max_rounds = static_cast<int>(cfg.get_long("max_ota_rounds", 8));

  // Collect attack records.
  std::vector<fs::path> record_paths;
  for (const auto &entry : fs::directory_iterator(out_dir))
    if (entry.path().extension() == ".json" &&
        entry.path().filename().string().rfind("s", 0) == 0)
      record_paths.push_back(entry.path());
  if (record_paths.empty())
    throw std::runtime_error("evaluate: no attack records in " + out_dir);
  std::sort(record_paths.begin(), record_paths.end());

  std::map<std::string, std::vector<advsp::SampleMetrics>> by_mode;
  for (const auto &rp : record_paths) {
    std::ifstream rin(rp);
    json rec = json::parse(rin);
    const std::string org_path = out_dir + "/" + rec["org_wav"].get<std::string>();
    const std::string adv_path = out_dir + "/" + rec["adv_wav"].get<std::string>();
    if (!fs::exists(adv_path))
      throw std::runtime_error("evaluate: missing adversarial wav " + adv_path);
    advsp::Waveform x_org = advsp::read_wav(org_path);
    advsp::Waveform x_adv = advsp::read_wav(adv_path);

    advsp::SampleMetrics sm;
    sm.id = rp.stem().string();
    const auto ref_words =
        advsp::split_words(rec["ground_truth"].get<std::string>());
    const auto hyp_words =
        advsp::split_words(rec["transcript_after"].get<std::string>());
    sm.edit_ops = advsp::word_edit_ops(ref_words, hyp_words);
    sm.wer_pct = ref_words.empty() ? 0.0 : advsp::wer(ref_words, hyp_words);
    sm.hit_exact_target =
        rec["transcript_after"].get<std::string>() == rec["target"].get<std::string>();
    sm.seg_snr_db = advsp::seg_snr(x_org, x_adv);
    sm.stoi_score = advsp::stoi(x_org, x_adv);
    sm.llr_score = advsp::llr(x_org, x_adv);

    const advsp::TokenSeq target =
        model.vocabulary.encode(rec["target"].get<std::string>());
    const std::uint64_t ota_seed = advsp::derive_seed(
        master_seed ^ 0x07Aull,
        1000003ull * rec["sample_index"].get<int>() + rec["target_index"].get<int>());
    advsp::PlaybackConfig pc =
        advsp::playback_config_from(cfg, x_adv.sample_rate_hz, ota_seed);
    sm.n_ota = advsp::measure_n_ota(model, x_adv, target, pc, max_rounds).n_ota;

    by_mode[rec["mode"].get<std::string>()].push_back(std::move(sm));
  }

  std::vector<std::pair<std::string, advsp::QualityReport>> reports;
  for (auto &[mode, samples] : by_mode)
    reports.emplace_back(mode, advsp::build_report(std::move(samples)));

  std::ofstream csv(out_dir + "/report.csv");
  advsp::write_report_csv(csv, reports);

  json jrep;
  for (const auto &[mode, rep] : reports) {
    json jm;
    jm["wer_pct"] = rep.wer_pct;
    jm["wer_std"] = rep.wer_std;
    jm["wer_pooled_pct"] = rep.wer_pooled_pct;
    jm["sla_pct"] = rep.sla_pct;
    jm["sla_std"] = rep.sla_std;
    jm["seg_snr_db"] = rep.seg_snr_db;
    jm["stoi"] = rep.stoi_score;
    jm["llr"] = rep.llr_score;
    jm["n_ota_mean"] = rep.n_ota_mean;
    jm["sample_count"] = rep.sample_count;
    jrep[mode] = jm;
  }
  std::ofstream jout(out_dir + "/report.json");
  jout << jrep.dump(2) << "\n";

  for (const auto &[mode, rep] : reports)
    std::cout << mode << ": WER " << rep.wer_pct << " +/- " << rep.wer_std
              << ", SLA " << rep.sla_pct << " +/- " << rep.sla_std
              << ", segSNR " << rep.seg_snr_db << ", STOI " << rep.stoi_score
              << ", LLR " << rep.llr_score << ", n_ota " << rep.n_ota_mean
              << "\n";
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  std::cerr << "evaluate wall-clock: " << dt.count() << " s\n";
  return 0;
}

int cmd_playback(const std::string &in_path, const std::string &out_path,
                 const CommonArgs &args) {
  const auto cfg = load_config(args);
  advsp::Waveform w = advsp::read_wav(in_path);
  advsp::PlaybackConfig pc =
      advsp::playback_config_from(cfg, w.sample_rate_hz, cfg.get_u64("seed", 0));
  advsp::write_wav(out_path, advsp::playback(w, pc));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_metrics(const std::string &org_path, const std::string &adv_path) {
  advsp::Waveform x_org = advsp::read_wav(org_path);
  advsp::Waveform x_adv = advsp::read_wav(adv_path);
  std::cout << "segSNR: " << advsp::seg_snr(x_org, x_adv) << " dB\n";
  std::cout << "STOI:   " << advsp::stoi(x_org, x_adv) << "\n";
  std::cout << "LLR:    " << advsp::llr(x_org, x_adv) << "\n";
  std::cout << "distortion: " << advsp::distortion_db(
                   [&] {
                     advsp::Waveform d = x_adv;
                     for (std::size_t i = 0; i < d.size(); ++i)
                       d.samples[i] -= x_org.samples[i];
                     return d;
                   }(),
                   x_org)
            << " dB\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Adversarial speech attack toolkit"};
  app.require_subcommand(1);

  CommonArgs targs, aargs, eargs, pargs;
  std::string pb_in, pb_out, m_org, m_adv;

  auto add_common = [](CLI::App *sub, CommonArgs &c) {
    sub->add_option("-c,--config", c.config_path, "key=value config file");
    sub->add_option("--set", c.overrides, "override a config key (key=value)");
    sub->add_option("-o,--out", c.out_dir_flag, "output directory");
  };

  auto *train = app.add_subcommand("train", "train the bundled CTC victim");
  add_common(train, targs);
  auto *attackc = app.add_subcommand("attack", "run batch attacks");
  add_common(attackc, aargs);
  auto *eval = app.add_subcommand("evaluate", "compute metrics and OTA robustness");
  add_common(eval, eargs);
  auto *play = app.add_subcommand("playback", "apply one simulated playback");
  add_common(play, pargs);
  play->add_option("input", pb_in, "input wav")->required();
  play->add_option("output", pb_out, "output wav")->required();
  auto *met = app.add_subcommand("metrics", "pairwise quality metrics on two wavs");
  met->add_option("original", m_org, "original wav")->required();
  met->add_option("adversarial", m_adv, "adversarial wav")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(targs);
    if (attackc->parsed()) return cmd_attack(aargs);
    if (eval->parsed()) return cmd_evaluate(eargs);
    if (play->parsed()) return cmd_playback(pb_in, pb_out, pargs);
    if (met->parsed()) return cmd_metrics(m_org, m_adv);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
