#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "repnp/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3, kTrend = 4 };

void add_common(CLI::App* sub, repnp::cli::CommonOptions& opts, bool trend_flag) {
  sub->add_option("-c,--config", opts.config_file, "configuration file")->check(CLI::ExistingFile);
  sub->add_option("--set", opts.overrides, "override a key, section.key=value (repeatable)");
  sub->add_option("-j,--jobs", opts.jobs, "worker threads, 0 = all cores");
  sub->add_flag("--dump-config", opts.dump_config, "print the resolved configuration and exit");
  if (trend_flag) {
    sub->add_flag("--assert-trend", opts.assert_trend,
                  "exit with code 4 unless PSNR strictly decreases with sigma_est");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-and-play image restoration with a reinforcement-learned denoiser"};
  app.require_subcommand(1);

  repnp::cli::CommonOptions train_opts;
  auto* train = app.add_subcommand("train-denoiser", "train the pixel-wise denoising agent");
  add_common(train, train_opts, false);

  repnp::cli::CommonOptions deblur_opts;
  auto* deblur = app.add_subcommand("deblur", "degrade and restore an evaluation set by deblurring");
  add_common(deblur, deblur_opts, true);

  repnp::cli::CommonOptions sisr_opts;
  auto* sisr = app.add_subcommand("sisr", "degrade and restore an evaluation set by super-resolution");
  add_common(sisr, sisr_opts, true);

  repnp::cli::CommonOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "PSNR against a mis-specified kernel width");
  add_common(sweep, sweep_opts, true);

  repnp::cli::DenoiseOptions denoise_opts;
  auto* denoise = app.add_subcommand("denoise", "denoise one image with a trained checkpoint");
  denoise->add_option("--checkpoint", denoise_opts.checkpoint, "checkpoint file")->required();
  denoise->add_option("-i,--input", denoise_opts.input, "noisy PGM image")->required();
  denoise->add_option("-o,--output", denoise_opts.output, "output PGM image")->required();
  denoise->add_option("-r,--reference", denoise_opts.reference, "clean reference for PSNR");
  denoise->add_option("--steps", denoise_opts.steps, "greedy steps")->capture_default_str();

  std::string psnr_ref;
  std::string psnr_test;
  int psnr_border = 0;
  auto* psnr = app.add_subcommand("psnr", "PSNR between two PGM images");
  psnr->add_option("reference", psnr_ref, "reference image")->required();
  psnr->add_option("test", psnr_test, "test image")->required();
  psnr->add_option("--border", psnr_border, "pixels ignored on each side")->capture_default_str();

  repnp::cli::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify-dataset", "list a directory of PGM images and check it");
  verify->add_option("dir", verify_opts.dir, "image directory")->required();
  verify->add_option("--expect-count", verify_opts.expect_count, "required number of images");
  verify->add_option("--min-size", verify_opts.min_size, "minimum height and width")->capture_default_str();

  repnp::cli::SyntheticOptions synth_opts;
  auto* synth = app.add_subcommand("make-synthetic", "write a deterministic set of synthetic test scenes");
  synth->add_option("-o,--out", synth_opts.out, "output directory")->required();
  synth->add_option("--count", synth_opts.count, "number of images")->capture_default_str();
  synth->add_option("--height", synth_opts.height, "image height")->capture_default_str();
  synth->add_option("--width", synth_opts.width, "image width")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "scene seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return repnp::cli::cmd_train_denoiser(train_opts);
    if (*deblur) return repnp::cli::cmd_deblur(deblur_opts);
    if (*sisr) return repnp::cli::cmd_sisr(sisr_opts);
    if (*sweep) return repnp::cli::cmd_sweep(sweep_opts);
    if (*denoise) return repnp::cli::cmd_denoise(denoise_opts);
    if (*psnr) return repnp::cli::cmd_psnr(psnr_ref, psnr_test, psnr_border);
    if (*verify) return repnp::cli::cmd_verify_dataset(verify_opts);
    if (*synth) return repnp::cli::cmd_make_synthetic(synth_opts);
  } catch (const repnp::cli::TrendFailure& e) {
    std::cerr << "trend assertion failed: " << e.what() << '\n';
    return kTrend;
  } catch (const repnp::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const repnp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const repnp::ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const repnp::NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
