#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "repnp/dataset.hpp"
#include "repnp/errors.hpp"
#include "repnp/image.hpp"
#include "repnp/nn.hpp"

namespace fs = std::filesystem;
using namespace repnp;
using namespace repnp::cli;

namespace {

Config tiny_schema() {
  return Config({
      {"a", "x", "1", "an integer"},
      {"a", "list", "1.5, 2.5", "a list"},
      {"b", "flag", "false", "a flag"},
      {"b", "name", "", "a string"},
  });
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

void write_images(const fs::path& dir, int count, int size, std::uint64_t seed) {
  const auto set = synthetic_set(count, size, size, seed);
  for (int i = 0; i < count; ++i) save_image(set[i], dir / ("img_" + std::to_string(10 + i) + ".pgm"));
}

fs::path tiny_checkpoint(const fs::path& dir) {
  NetArchitecture arch;
  arch.width = 4;
  arch.encoder_dilations = {1, 2};
  const fs::path path = dir / "tiny.bin";
  save_checkpoint(PolicyValueNet(arch, 5), path);
  return path;
}

}  // namespace

TEST(Config, DefaultsAndTypedGetters) {
  const Config c = tiny_schema();
  EXPECT_EQ(c.get_int("a", "x"), 1);
  EXPECT_EQ(c.get_doubles("a", "list"), (std::vector<double>{1.5, 2.5}));
  EXPECT_FALSE(c.get_bool("b", "flag"));
  EXPECT_EQ(c.get("b", "name"), "");
  EXPECT_THROW(c.get("a", "missing"), ConfigError);
  EXPECT_THROW(c.get_bool("a", "list"), ConfigError);
  EXPECT_THROW(c.get_int("a", "list"), ConfigError);
}

TEST(Config, LoadsFileWithCommentsAndQuotes) {
  const fs::path dir = fresh_dir("repnp_cfg_load");
  std::ofstream(dir / "c.ini") << "# header\n\n[a]\nx = 7   # trailing\nlist=3,4\n[b]\nname = \"with space\"\nflag = yes\n";
  Config c = tiny_schema();
  c.load_file(dir / "c.ini");
  EXPECT_EQ(c.get_int("a", "x"), 7);
  EXPECT_EQ(c.get_ints("a", "list"), (std::vector<int>{3, 4}));
  EXPECT_EQ(c.get("b", "name"), "with space");
  EXPECT_TRUE(c.get_bool("b", "flag"));
}

TEST(Config, UnknownKeysAndSectionsNameTheLine) {
  const fs::path dir = fresh_dir("repnp_cfg_unknown");
  std::ofstream(dir / "key.ini") << "[a]\nx = 1\nxx = 2\n";
  std::ofstream(dir / "sec.ini") << "[zzz]\n";
  std::ofstream(dir / "orphan.ini") << "x = 1\n";
  Config c = tiny_schema();
  try {
    c.load_file(dir / "key.ini");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("key.ini:3"), std::string::npos);
  }
  EXPECT_THROW(c.load_file(dir / "sec.ini"), ConfigError);
  EXPECT_THROW(c.load_file(dir / "orphan.ini"), ConfigError);
  EXPECT_THROW(c.load_file(dir / "absent.ini"), ConfigError);
}

TEST(Config, Overrides) {
  Config c = tiny_schema();
  c.apply_override("a.x=42");
  EXPECT_EQ(c.get_int("a", "x"), 42);
  c.apply_override("b.name = 'q'");
  EXPECT_EQ(c.get("b", "name"), "q");
  EXPECT_THROW(c.apply_override("a.nope=1"), ConfigError);
  EXPECT_THROW(c.apply_override("ax=1"), ConfigError);
  EXPECT_THROW(c.apply_override("a.x"), ConfigError);
}

TEST(Config, WrittenConfigReloadsToSameValues) {
  Config c = tiny_schema();
  c.apply_override("a.x=9");
  c.apply_override("b.name=zz");
  std::ostringstream text;
  c.write(text);
  EXPECT_NE(text.str().find("# an integer (default: 1)"), std::string::npos);
  const fs::path dir = fresh_dir("repnp_cfg_roundtrip");
  c.write_file(dir / "r.ini");
  Config d = tiny_schema();
  d.load_file(dir / "r.ini");
  std::ostringstream again;
  d.write(again);
  EXPECT_EQ(text.str(), again.str());
}

TEST(Config, EveryCommandKeyIsDocumented) {
  for (const Config& schema : {train_schema(), deblur_schema(), sisr_schema(), sweep_schema()}) {
    std::ostringstream text;
    schema.write(text);
    std::istringstream lines(text.str());
    std::string line;
    std::string previous;
    while (std::getline(lines, line)) {
      if (!line.empty() && line[0] != '#' && line[0] != '[') {
        EXPECT_EQ(previous.rfind("# ", 0), 0u) << line;
        EXPECT_NE(previous.find("(default: "), std::string::npos) << line;
      }
      previous = line;
    }
  }
}

TEST(Config, ResolveAppliesJobsFlag) {
  CommonOptions opts;
  opts.jobs = 3;
  opts.overrides = {"run.seed=17"};
  const Config c = resolve_config(deblur_schema(), opts);
  EXPECT_EQ(c.get_int("run", "jobs"), 3);
  EXPECT_EQ(c.get_u64("run", "seed"), 17u);
  opts.jobs = -1;
  EXPECT_THROW(resolve_config(deblur_schema(), opts), ConfigError);
}

TEST(Commands, TrainEmptyDirectoryIsDataError) {
  const fs::path dir = fresh_dir("repnp_cli_empty");
  fs::create_directories(dir / "train");
  CommonOptions opts;
  opts.overrides = {"data.train_dir=" + (dir / "train").string(), "run.output_dir=" + (dir / "out").string()};
  EXPECT_THROW(cmd_train_denoiser(opts), DataError);
}

TEST(Commands, SmokeTrainingWritesOneMetricsRowPerEpoch) {
  const fs::path dir = fresh_dir("repnp_cli_train");
  fs::create_directories(dir / "train");
  write_images(dir / "train", 8, 32, 4);
  CommonOptions opts;
  opts.overrides = {"data.train_dir=" + (dir / "train").string(),
                    "run.output_dir=" + (dir / "out").string(),
                    "network.width=6",
                    "network.dilations=1,2",
                    "ppo.total_epochs=10",
                    "ppo.batch_size=8",
                    "ppo.patch_size=16",
                    "ppo.checkpoint_every=5",
                    "ppo.holdout_patches=1"};
  EXPECT_EQ(cmd_train_denoiser(opts), 0);
  EXPECT_EQ(count_lines(dir / "out" / "metrics.csv"), 11);
  for (const char* f : {"final.bin", "best.bin", "checkpoint_epoch_0005.bin", "checkpoint_epoch_0010.bin",
                        "resolved_config.ini"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const std::string first = slurp(dir / "out" / "metrics.csv");

  CommonOptions again;
  again.config_file = dir / "out" / "resolved_config.ini";
  again.overrides = {"run.output_dir=" + (dir / "out2").string()};
  EXPECT_EQ(cmd_train_denoiser(again), 0);
  EXPECT_EQ(slurp(dir / "out2" / "metrics.csv"), first);
  EXPECT_EQ(slurp(dir / "out2" / "final.bin"), slurp(dir / "out" / "final.bin"));
}

TEST(Commands, MissingCheckpointIsDataError) {
  const fs::path dir = fresh_dir("repnp_cli_nockpt");
  fs::create_directories(dir / "eval");
  write_images(dir / "eval", 2, 24, 1);
  CommonOptions opts;
  opts.overrides = {"data.eval_dir=" + (dir / "eval").string(), "denoiser.checkpoint=" + (dir / "no.bin").string(),
                    "run.output_dir=" + (dir / "out").string()};
  EXPECT_THROW(cmd_deblur(opts), DataError);
  EXPECT_THROW(cmd_sisr(opts), DataError);
  EXPECT_THROW(cmd_sweep(opts), DataError);
}

TEST(Commands, SisrEmitsOneRowPerImage) {
  const fs::path dir = fresh_dir("repnp_cli_sisr");
  fs::create_directories(dir / "eval");
  write_images(dir / "eval", 12, 26, 2);
  CommonOptions opts;
  opts.overrides = {"data.eval_dir=" + (dir / "eval").string(),
                    "denoiser.checkpoint=" + tiny_checkpoint(dir).string(),
                    "run.output_dir=" + (dir / "out").string(),
                    "degradation.factors=4",
                    "degradation.kernel_size=7",
                    "estimate.sigmas=2.2",
                    "pnp.iterations=2",
                    "eval.save_images=false"};
  EXPECT_EQ(cmd_sisr(opts), 0);
  EXPECT_EQ(count_lines(dir / "out" / "sisr_x4_per_image.csv"), 13);
  EXPECT_EQ(count_lines(dir / "out" / "sisr_x4_summary.csv"), 2);
}

TEST(Commands, SweepWritesOneCsvPerSetting) {
  const fs::path dir = fresh_dir("repnp_cli_sweep");
  fs::create_directories(dir / "eval");
  write_images(dir / "eval", 2, 24, 3);
  CommonOptions opts;
  opts.overrides = {"data.eval_dir=" + (dir / "eval").string(),
                    "denoiser.checkpoint=" + tiny_checkpoint(dir).string(),
                    "run.output_dir=" + (dir / "out").string(),
                    "pnp.iterations=2",
                    "sweep.kernel_size=7"};
  EXPECT_EQ(cmd_sweep(opts), 0);
  EXPECT_EQ(count_lines(dir / "out" / "sweep_deblur.csv"), 8);
  for (int s : {2, 3, 4}) {
    EXPECT_EQ(count_lines(dir / "out" / ("sweep_sisr_x" + std::to_string(s) + ".csv")), 5);
  }
  opts.overrides.push_back("sweep.tasks=deblur,blur");
  EXPECT_THROW(cmd_sweep(opts), ConfigError);
}

TEST(Commands, DenoiseAndPsnr) {
  const fs::path dir = fresh_dir("repnp_cli_denoise");
  const ImageGray clean = synthetic_scene(20, 20, 9);
  save_image(clean, dir / "clean.pgm");
  DenoiseOptions d;
  d.checkpoint = tiny_checkpoint(dir);
  d.input = dir / "clean.pgm";
  d.output = dir / "out.pgm";
  d.reference = dir / "clean.pgm";
  EXPECT_EQ(cmd_denoise(d), 0);
  EXPECT_TRUE(fs::exists(d.output));
  d.checkpoint = dir / "missing.bin";
  EXPECT_THROW(cmd_denoise(d), DataError);
  EXPECT_EQ(cmd_psnr(dir / "clean.pgm", dir / "out.pgm", 2), 0);
  EXPECT_THROW(cmd_psnr(dir / "clean.pgm", dir / "out.pgm", -1), ConfigError);
}

TEST(Commands, VerifyDatasetCountsImages) {
  const fs::path dir = fresh_dir("repnp_cli_verify");
  write_images(dir, 3, 16, 1);
  VerifyOptions v;
  v.dir = dir;
  v.expect_count = 3;
  EXPECT_EQ(cmd_verify_dataset(v), 0);
  v.expect_count = 2;
  EXPECT_THROW(cmd_verify_dataset(v), DataError);
  v.expect_count.reset();
  v.min_size = 17;
  EXPECT_THROW(cmd_verify_dataset(v), DataError);
}
