#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"

namespace repnp::cli {

/// Raised when a requested trend assertion does not hold (exit code 4).
class TrendFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Options shared by the config-driven commands.
struct CommonOptions {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;
  std::optional<int> jobs;
  bool dump_config = false;
  bool assert_trend = false;
};

Config train_schema();
Config deblur_schema();
Config sisr_schema();
Config sweep_schema();

/// Loads the config file and applies overrides / flags on top of `base`.
Config resolve_config(Config base, const CommonOptions& opts);

int cmd_train_denoiser(const CommonOptions& opts);
int cmd_deblur(const CommonOptions& opts);
int cmd_sisr(const CommonOptions& opts);
int cmd_sweep(const CommonOptions& opts);

struct DenoiseOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::filesystem::path output;
  std::optional<std::filesystem::path> reference;
  int steps = 5;
};
int cmd_denoise(const DenoiseOptions& opts);

int cmd_psnr(const std::filesystem::path& reference, const std::filesystem::path& test, int border);

struct VerifyOptions {
  std::filesystem::path dir;
  std::optional<int> expect_count;
  int min_size = 1;
};
int cmd_verify_dataset(const VerifyOptions& opts);

struct SyntheticOptions {
  std::filesystem::path out;
  int count = 12;
  int height = 72;
  int width = 72;
  std::uint64_t seed = 1;
};
int cmd_make_synthetic(const SyntheticOptions& opts);

}  // namespace repnp::cli
