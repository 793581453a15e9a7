#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "advsp/harness.hpp"

using namespace advsp;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string &name, const std::string &body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("key=value config: parsing, comments, later keys win") {
  const fs::path p = write_temp("advsp_cfg_test.txt",
                                "# experiment\n"
                                "epsilon_db = -30\n"
                                "seed=9\n"
                                "junk line without equals\n"
                                "epsilon_db=-28  # override, last wins\n"
                                "  rir = exp:rt60=0.3,seed=7 \n");
  KeyValueConfig cfg = KeyValueConfig::from_file(p.string());
  CHECK(cfg.get_double("epsilon_db", 0.0) == -28.0);
  CHECK(cfg.get_u64("seed", 0) == 9);
  CHECK(cfg.get("rir", "") == "exp:rt60=0.3,seed=7");
  CHECK(!cfg.has("junk"));
  CHECK(cfg.get_long("missing", 42) == 42);
  cfg.set("epsilon_db", "-32");
  CHECK(cfg.get_double("epsilon_db", 0.0) == -32.0);
  fs::remove(p);
  CHECK_THROWS_AS(KeyValueConfig::from_file("/nonexistent/advsp.cfg"),
                  std::runtime_error);
}

TEST_CASE("canonical form is sorted and insertion-order independent") {
  KeyValueConfig a, b;
  a.set("zeta", "1");
  a.set("alpha", "2");
  b.set("alpha", "2");
  b.set("zeta", "1");
  CHECK(a.canonical() == "alpha=2\nzeta=1\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(fnv1a64(a.canonical()) == fnv1a64(b.canonical()));
  a.set("out_dir", "/tmp/somewhere");  // output location is not identity
  CHECK(a.canonical() == b.canonical());
}

TEST_CASE("fnv1a64 frozen reference values") {
  // standard FNV-1a test vectors
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
  CHECK(fnv1a64("foobar") == 0x85944171F73967E8ULL);
  CHECK(hex64(0xdeadbeefULL) == "deadbeef");
}

TEST_CASE("run manifest round trips and stays timestamp-free") {
  RunManifest m;
  m.config_hash = "abc123";
  m.files = {"victim.bin", "s0_t0_cramer.wav"};
  const fs::path p = fs::temp_directory_path() / "advsp_manifest_rt.txt";
  m.save(p.string());
  RunManifest r = RunManifest::load(p.string());
  CHECK(r.config_hash == "abc123");
  CHECK(r.tool_version == kToolVersion);
  CHECK(r.files == m.files);
  // byte-identical on re-save: nothing volatile in the serialization
  const fs::path q = fs::temp_directory_path() / "advsp_manifest_rt2.txt";
  m.save(q.string());
  std::ifstream f1(p), f2(q);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  fs::remove(p);
  fs::remove(q);
}

TEST_CASE("attack_config_from maps keys and keeps defaults") {
  KeyValueConfig cfg;
  AttackConfig def = attack_config_from(cfg, AttackMode::kCramer, 3);
  CHECK(def.epsilon_db == -16.0);
  CHECK(def.outer_step == 5e-4);
  CHECK(def.sign_grad);
  CHECK(def.max_outer_iters == 2000);
  CHECK(def.max_inner_iters == 50);
  CHECK(def.cramer.mode == CramerMode::kCramer2);
  CHECK(def.seed == 3);

  cfg.set("epsilon_db", "-20");
  cfg.set("sign_grad", "0");
  cfg.set("cramer_mode", "critic");
  cfg.set("max_inner_iters", "7");
  AttackConfig a = attack_config_from(cfg, AttackMode::kCw, 4);
  CHECK(a.epsilon_db == -20.0);
  CHECK(!a.sign_grad);
  CHECK(a.mode == AttackMode::kCw);
  CHECK(a.cramer.mode == CramerMode::kCritic);
  CHECK(a.max_inner_iters == 7);
}

TEST_CASE("playback_config_from parses the channel keys") {
  KeyValueConfig cfg;
  PlaybackConfig def = playback_config_from(cfg, 16000, 5);
  CHECK(def.rir.descriptor == "exp:rt60=0.3,seed=7");
  CHECK(!def.noise_snr_db);
  CHECK(!def.bandpass_hz);
  CHECK(def.seed == 5);

  cfg.set("rir", "unit");
  cfg.set("noise_snr_db", "25");
  cfg.set("bandpass_khz", "1,4");
  PlaybackConfig p = playback_config_from(cfg, 16000, 6);
  CHECK(p.rir.descriptor == "unit");
  REQUIRE(p.noise_snr_db);
  CHECK(*p.noise_snr_db == 25.0);
  REQUIRE(p.bandpass_hz);
  CHECK(p.bandpass_hz->first == 1000.0);
  CHECK(p.bandpass_hz->second == 4000.0);

  cfg.set("bandpass_khz", "nocomma");
  CHECK_THROWS_AS(playback_config_from(cfg, 16000, 6), std::invalid_argument);
}

TEST_CASE("out dir resolution order: config key, env var, fallback") {
  KeyValueConfig cfg;
  unsetenv("ADVSP_OUT_ROOT");
  CHECK(resolve_out_dir(cfg) == "out");
  setenv("ADVSP_OUT_ROOT", "/tmp/advsp_env_out", 1);
  CHECK(resolve_out_dir(cfg) == "/tmp/advsp_env_out");
  cfg.set("out_dir", "/tmp/advsp_cfg_out");
  CHECK(resolve_out_dir(cfg) == "/tmp/advsp_cfg_out");
  unsetenv("ADVSP_OUT_ROOT");
}
