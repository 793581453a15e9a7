// advsp/harness.hpp
// Experiment configuration (key=value text file, flag-overridable), the run
// manifest, and the master-seed fan-out shared by the CLI subcommands.

#ifndef ADVSP_HARNESS_HPP
#define ADVSP_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advsp/attack.hpp"
#include "advsp/ota.hpp"

namespace advsp {

// Flat key=value text. '#' starts a comment; later keys win, so CLI flag
// overrides are appended after the file contents.
struct KeyValueConfig {
  std::map<std::string, std::string> entries;

  static KeyValueConfig from_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    KeyValueConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      if (!key.empty()) cfg.entries[key] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  void set(const std::string &key, const std::string &value) {
    entries[key] = value;
  }
  bool has(const std::string &key) const { return entries.count(key) > 0; }
  std::string get(const std::string &key, const std::string &fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second;
  }
  double get_double(const std::string &key, double fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : std::stod(it->second);
  }
  long get_long(const std::string &key, long fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : std::stol(it->second);
  }
  std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : std::stoull(it->second);
  }

  // Canonical serialized form: sorted key=value lines. out_dir is excluded
  // so the hash identifies the experiment, not where it was written.
  std::string canonical() const {
    std::ostringstream out;
    for (const auto &[k, v] : entries)
      if (k != "out_dir") out << k << "=" << v << "\n";
    return out.str();
  }
};

// FNV-1a, stable across runs and platforms.
inline std::uint64_t fnv1a64(const std::string &data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

constexpr const char *kToolVersion = "advsp 0.1.0";

// Per-run index of every produced file. Deliberately timestamp-free so two
// identical runs produce byte-identical output trees; wall-clock timings go
// to the console log instead.
struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<std::string> files;

  void save(const std::string &path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot open " + path);
    out << "config_hash=" << config_hash << "\n";
    out << "tool_version=" << tool_version << "\n";
    for (const auto &f : files) out << "file=" << f << "\n";
  }

  static RunManifest load(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    RunManifest m;
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "config_hash")
        m.config_hash = val;
      else if (key == "tool_version")
        m.tool_version = val;
      else if (key == "file")
        m.files.push_back(val);
    }
    return m;
  }
};

// The output root comes from, in precedence order: the --out flag, the
// config file, the ADVSP_OUT_ROOT environment variable.
inline std::string resolve_out_dir(const KeyValueConfig &cfg) {
  if (cfg.has("out_dir")) return cfg.get("out_dir", "");
  if (const char *env = std::getenv("ADVSP_OUT_ROOT")) return env;
  return "out";
}

inline AttackConfig attack_config_from(const KeyValueConfig &cfg,
                                       AttackMode mode,
                                       std::uint64_t derived_seed) {
  AttackConfig a;
  a.epsilon_db = cfg.get_double("epsilon_db", -16.0);
  a.loss_scale = cfg.get_double("loss_scale", 1.0);
  a.outer_step = cfg.get_double("outer_step", 5e-4);
  a.sign_grad = cfg.get_long("sign_grad", 1) != 0;
  a.inner_step = cfg.get_double("inner_step", 1e-3);
  a.max_outer_iters = static_cast<int>(cfg.get_long("max_outer_iters", 2000));
  a.max_inner_iters = static_cast<int>(cfg.get_long("max_inner_iters", 50));
  a.mode = mode;
  a.cramer.mode = cfg.get("cramer_mode", "cramer2") == "critic"
                      ? CramerMode::kCritic
                      : CramerMode::kCramer2;
  a.cramer.reference_size_cap =
      static_cast<std::size_t>(cfg.get_long("reference_size_cap", 1 << 16));
  a.seed = derived_seed;
  return a;
}

inline PlaybackConfig playback_config_from(const KeyValueConfig &cfg,
                                           int sample_rate_hz,
                                           std::uint64_t derived_seed) {
  PlaybackConfig p;
  p.rir = parse_rir_descriptor(cfg.get("rir", "exp:rt60=0.3,seed=7"),
                               sample_rate_hz);
  if (cfg.has("noise_snr_db"))
    p.noise_snr_db = cfg.get_double("noise_snr_db", 30.0);
  if (cfg.has("bandpass_khz")) {
    const std::string v = cfg.get("bandpass_khz", "1,4");
    const auto comma = v.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("config: bandpass_khz expects <low>,<high>");
    p.bandpass_hz = {std::stod(v.substr(0, comma)) * 1000.0,
                     std::stod(v.substr(comma + 1)) * 1000.0};
  }
  p.seed = derived_seed;
  return p;
}

}  // namespace advsp

#endif  // ADVSP_HARNESS_HPP
