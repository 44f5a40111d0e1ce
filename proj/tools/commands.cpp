#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repnp/dataset.hpp"
#include "repnp/denoiser.hpp"
#include "repnp/errors.hpp"
#include "repnp/forward_model.hpp"
#include "repnp/image.hpp"
#include "repnp/nn.hpp"
#include "repnp/parallel.hpp"
#include "repnp/pnp.hpp"
#include "repnp/ppo.hpp"

namespace fs = std::filesystem;

namespace repnp::cli {

namespace {

constexpr int kCsvPrecision = 10;

std::vector<ConfigKey> run_keys(const std::string& output_dir) {
  return {
      {"run", "seed", "1", "master seed for noise, patches and initialisation"},
      {"run", "jobs", "0", "worker threads, 0 = all cores"},
      {"run", "output_dir", output_dir, "directory receiving CSVs, images and the resolved config"},
  };
}

std::vector<ConfigKey> pnp_keys() {
  return {
      {"denoiser", "checkpoint", "", "trained denoiser checkpoint"},
      {"denoiser", "sigma_train", "25", "noise level the denoiser was trained at"},
      {"denoiser", "steps", "5", "greedy steps per denoiser call"},
      {"pnp", "iterations", "30", "HQS iterations"},
      {"pnp", "sigma_start", "50", "first denoiser strength"},
      {"pnp", "sigma_end", "auto", "last denoiser strength, auto = max(noise_sigma, 1)"},
      {"pnp", "lambda", "auto", "regularisation weight, auto = 0.23 * sigma_end^2"},
      {"pnp", "cg_tol", "1e-6", "relative residual tolerance of the SISR solver"},
      {"pnp", "cg_max_iter", "100", "iteration cap of the SISR solver"},
      {"eval", "border", "auto", "pixels excluded from PSNR on each side, auto = kernel radius"},
  };
}

Config make_schema(std::vector<std::vector<ConfigKey>> groups) {
  std::vector<ConfigKey> all;
  for (auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  return Config(std::move(all));
}

std::string format_number(double v) {
  std::ostringstream s;
  s << std::setprecision(kCsvPrecision) << v;
  return s.str();
}

std::string sigma_tag(double sigma) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << sigma;
  return s.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(kCsvPrecision);
  return out;
}

fs::path prepare_output(const Config& cfg) {
  const fs::path dir = cfg.get("run", "output_dir");
  if (dir.empty()) throw ConfigError("run.output_dir must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
  cfg.write_file(dir / "resolved_config.ini");
  return dir;
}

std::vector<ImageGray> load_required(const Config& cfg, const std::string& section, const std::string& key) {
  const std::string dir = cfg.get(section, key);
  if (dir.empty()) throw ConfigError(section + "." + key + " must name a directory of PGM images");
  return load_dataset(dir);
}

std::vector<std::string> image_names(const Config& cfg, const std::string& section, const std::string& key) {
  std::vector<std::string> names;
  for (const fs::path& p : list_images(cfg.get(section, key))) names.push_back(p.stem().string());
  return names;
}

NetArchitecture architecture_from(const Config& cfg) {
  NetArchitecture arch;
  arch.width = cfg.get_int("network", "width");
  arch.encoder_dilations = cfg.get_ints("network", "dilations");
  if (arch.width < 1 || arch.encoder_dilations.empty()) {
    throw ConfigError("network.width must be positive and network.dilations non-empty");
  }
  return arch;
}

Kernel kernel_from(const Config& cfg, double sigma) {
  const std::string file = cfg.get("degradation", "kernel_file");
  if (!file.empty()) return load_kernel(file);
  return gaussian_kernel(cfg.get_int("degradation", "kernel_size"), sigma);
}

struct PriorBundle {
  PolicyValueNet net;
  DenoiserPrior prior;
};

std::unique_ptr<PriorBundle> load_prior(const Config& cfg) {
  const std::string path = cfg.get("denoiser", "checkpoint");
  if (path.empty()) throw ConfigError("denoiser.checkpoint is required");
  if (!fs::exists(path)) throw DataError("checkpoint not found: " + path);
  auto bundle = std::make_unique<PriorBundle>(PriorBundle{load_checkpoint(path), {}});
  EpisodeConfig episode;
  episode.steps = cfg.get_int("denoiser", "steps");
  episode.validate();
  bundle->prior = make_drl_prior(bundle->net, episode, cfg.get_double("denoiser", "sigma_train"));
  return bundle;
}

PnPConfig pnp_from(const Config& cfg, double noise_sigma) {
  PnPConfig p;
  p.iterations = cfg.get_int("pnp", "iterations");
  p.sigma_start = cfg.get_double("pnp", "sigma_start");
  p.sigma_end = cfg.is_auto("pnp", "sigma_end") ? resolve_sigma_end(noise_sigma) : cfg.get_double("pnp", "sigma_end");
  p.lambda = cfg.is_auto("pnp", "lambda") ? default_lambda(p.sigma_end) : cfg.get_double("pnp", "lambda");
  p.cg.tol = cfg.get_double("pnp", "cg_tol");
  p.cg.max_iter = cfg.get_int("pnp", "cg_max_iter");
  return p;
}

int border_from(const Config& cfg, const Kernel& kernel) {
  if (cfg.is_auto("eval", "border")) return kernel.size() / 2;
  const int b = cfg.get_int("eval", "border");
  if (b < 0) throw ConfigError("eval.border must be >= 0 or auto");
  return b;
}

void check_trend(const std::vector<SweepRow>& rows, double truth, const std::string& label) {
  std::vector<SweepRow> tail;
  for (const SweepRow& r : rows) {
    if (r.sigma_est >= truth) tail.push_back(r);
  }
  std::sort(tail.begin(), tail.end(), [](const SweepRow& a, const SweepRow& b) { return a.sigma_est < b.sigma_est; });
  if (tail.size() >= 2 && !strictly_decreasing(tail)) {
    throw TrendFailure(label + ": mean PSNR is not strictly decreasing in sigma_est");
  }
  const auto control = std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) { return r.sigma_est == truth; });
  if (control == rows.end()) return;
  for (const SweepRow& r : rows) {
    if (&r != &*control && !(control->mean_psnr > r.mean_psnr)) {
      throw TrendFailure(label + ": control sigma_est " + format_number(truth) + " is not the best row");
    }
  }
}

void print_rows(const std::string& label, const std::vector<SweepRow>& rows) {
  for (const SweepRow& r : rows) {
    std::cout << label << " sigma_est=" << sigma_tag(r.sigma_est) << " mean_psnr=" << std::fixed
              << std::setprecision(4) << r.mean_psnr << " std=" << r.std_psnr << std::defaultfloat << '\n';
  }
}

SweepRow summarize(double sigma_est, const std::vector<double>& values) {
  SweepRow row;
  row.sigma_est = sigma_est;
  row.per_image = values;
  row.n_images = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  row.mean_psnr = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - row.mean_psnr) * (v - row.mean_psnr);
  row.std_psnr = values.size() > 1 ? std::sqrt(sq / static_cast<double>(values.size() - 1)) : 0.0;
  return row;
}

struct Restoration {
  Degradation truth;
  std::vector<double> est_sigmas;
  std::string label;
  std::string file_prefix;
};

// Degrades every image with the true model, restores it with each estimated
// kernel, writes the per-image and summary CSVs and returns the summary.
std::vector<SweepRow> restore_set(const Config& cfg, const fs::path& out_dir, const Restoration& task,
                                  const std::vector<ImageGray>& images, const std::vector<std::string>& names,
                                  const DenoiserPrior& prior, bool save_images) {
  const std::uint64_t seed = cfg.get_u64("run", "seed");
  const int jobs = cfg.get_int("run", "jobs");
  const int border = border_from(cfg, task.truth.kernel);
  const PnPConfig base = pnp_from(cfg, task.truth.noise_sigma);
  const std::size_t n = images.size();
  const std::size_t m = task.est_sigmas.size();

  std::vector<ImageGray> clean = images;
  if (task.truth.kind == Degradation::Kind::SISR) {
    for (ImageGray& img : clean) img = center_crop_to_multiple(img, task.truth.factor);
  }

  std::vector<RestorationRecord> records(n * m);
  parallel_for(n * m, jobs, [&](std::size_t job) {
    const std::size_t s = job / n;
    const std::size_t i = job % n;
    PnPConfig pc = base;
    pc.degradation_est = task.truth;
    pc.degradation_est.kernel = gaussian_kernel(cfg.get_int("degradation", "kernel_size"), task.est_sigmas[s]);
    records[job] = restore_one(clean[i], task.truth, pc, prior, seed + i, border);
  });

  std::ofstream per_image = open_output(out_dir / (task.file_prefix + "_per_image.csv"));
  per_image << "image,sigma_est,degraded_psnr,restored_psnr\n";
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < m; ++s) {
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      const RestorationRecord& r = records[s * n + i];
      per_image << names[i] << ',' << task.est_sigmas[s] << ',' << r.degraded_psnr << ',' << r.restored_psnr << '\n';
      values.push_back(r.restored_psnr);
      if (save_images) {
        const fs::path dir = out_dir / task.file_prefix / ("sigma_" + sigma_tag(task.est_sigmas[s]));
        fs::create_directories(dir);
        save_image(r.restored, dir / (names[i] + ".pgm"));
        if (s == 0) save_image(clip(r.degraded), out_dir / task.file_prefix / (names[i] + "_degraded.pgm"));
      }
    }
    rows.push_back(summarize(task.est_sigmas[s], values));
  }
  std::ofstream summary = open_output(out_dir / (task.file_prefix + "_summary.csv"));
  write_sweep_csv(summary, rows);

  double degraded_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) degraded_mean += records[i].degraded_psnr;
  degraded_mean /= static_cast<double>(n);
  std::cout << task.label << " degraded mean_psnr=" << std::fixed << std::setprecision(4) << degraded_mean
            << std::defaultfloat << '\n';
  print_rows(task.label, rows);
  return rows;
}

std::vector<ConfigKey> degradation_keys(const std::string& noise_default, bool with_factors) {
  std::vector<ConfigKey> keys = {
      {"degradation", "kernel_size", "25", "side length of the Gaussian blur kernel"},
      {"degradation", "sigma_true", "2.0", "standard deviation of the true blur kernel"},
      {"degradation", "noise_sigma", noise_default, "standard deviation of additive Gaussian noise"},
      {"degradation", "kernel_file", "", "optional kernel file replacing the true Gaussian"},
  };
  if (with_factors) keys.push_back({"degradation", "factors", "2,3,4", "subsampling factors"});
  return keys;
}

}  // namespace

Config train_schema() {
  return make_schema({
      run_keys("train_out"),
      {
          {"data", "train_dir", "", "directory of clean training images"},
          {"data", "holdout_dir", "", "directory of held-out clean images, empty = first training image"},
          {"network", "width", "96", "feature channels of every hidden layer"},
          {"network", "dilations", "1,2,3,4", "dilation of each encoder layer"},
          {"episode", "steps", "5", "denoising steps per episode"},
          {"ppo", "gamma", "0.95", "reward discount"},
          {"ppo", "clip_epsilon", "0.2", "probability ratio clip range"},
          {"ppo", "entropy_coeff", "0.01", "entropy bonus weight"},
          {"ppo", "value_loss_weight", "1.0", "value regression weight in the joint loss"},
          {"ppo", "epochs_per_batch", "4", "optimisation passes over each collected batch"},
          {"ppo", "batch_size", "32", "patches collected per epoch"},
          {"ppo", "minibatch_size", "0", "patches per gradient step, 0 = whole batch"},
          {"ppo", "learning_rate", "1e-4", "Adam step size"},
          {"ppo", "total_epochs", "600", "training epochs"},
          {"ppo", "sigma_train", "25", "noise level of training inputs"},
          {"ppo", "patch_size", "70", "side length of training patches"},
          {"ppo", "reward_scale", "0.00392156862745098", "factor applied to per-pixel rewards"},
          {"ppo", "holdout_patches", "4", "held-out crops scored after every epoch"},
          {"ppo", "checkpoint_every", "50", "epochs between periodic checkpoints, 0 = none"},
      },
  });
}

Config deblur_schema() {
  return make_schema({
      run_keys("deblur_out"),
      {{"data", "eval_dir", "", "directory of clean evaluation images"}},
      degradation_keys("7.65", false),
      {{"estimate", "sigmas", "2.0", "kernel standard deviations assumed by the solver"}},
      pnp_keys(),
      {{"eval", "save_images", "true", "write restored and degraded images"}},
  });
}

Config sisr_schema() {
  return make_schema({
      run_keys("sisr_out"),
      {{"data", "eval_dir", "", "directory of clean evaluation images"}},
      degradation_keys("0", true),
      {{"estimate", "sigmas", "2.0", "kernel standard deviations assumed by the solver"}},
      pnp_keys(),
      {{"eval", "save_images", "true", "write restored and degraded images"}},
  });
}

Config sweep_schema() {
  return make_schema({
      run_keys("sweep_out"),
      {{"data", "eval_dir", "", "directory of clean evaluation images"}},
      {
          {"sweep", "tasks", "deblur,sisr", "which sweeps to run"},
          {"sweep", "deblur_sigmas", "2.2,2.3,2.4,2.5,2.6,2.7,2.8", "solver kernel stds for deblurring"},
          {"sweep", "sisr_sigmas", "2.2,2.3,2.4,2.5", "solver kernel stds for super-resolution"},
          {"sweep", "deblur_noise_sigma", "7.65", "noise std of the deblurring observations"},
          {"sweep", "sisr_noise_sigma", "0", "noise std of the low-resolution observations"},
          {"sweep", "factors", "2,3,4", "super-resolution factors"},
          {"sweep", "kernel_size", "25", "side length of every Gaussian kernel"},
          {"sweep", "sigma_true", "2.0", "standard deviation of the true kernel"},
      },
      pnp_keys(),
  });
}

Config resolve_config(Config base, const CommonOptions& opts) {
  if (opts.config_file) base.load_file(*opts.config_file);
  for (const std::string& o : opts.overrides) base.apply_override(o);
  if (opts.jobs) base.set("run", "jobs", std::to_string(*opts.jobs));
  if (base.get_int("run", "jobs") < 0) throw ConfigError("run.jobs must be >= 0");
  return base;
}

int cmd_train_denoiser(const CommonOptions& opts) {
  const Config cfg = resolve_config(train_schema(), opts);
  if (opts.dump_config) {
    cfg.write(std::cout);
    return 0;
  }
  PPOConfig ppo;
  ppo.gamma = cfg.get_double("ppo", "gamma");
  ppo.clip_epsilon = cfg.get_double("ppo", "clip_epsilon");
  ppo.entropy_coeff = cfg.get_double("ppo", "entropy_coeff");
  ppo.value_loss_weight = cfg.get_double("ppo", "value_loss_weight");
  ppo.epochs_per_batch = cfg.get_int("ppo", "epochs_per_batch");
  ppo.batch_size = cfg.get_int("ppo", "batch_size");
  ppo.minibatch_size = cfg.get_int("ppo", "minibatch_size");
  ppo.learning_rate = cfg.get_double("ppo", "learning_rate");
  ppo.total_epochs = cfg.get_int("ppo", "total_epochs");
  ppo.sigma_train = cfg.get_double("ppo", "sigma_train");
  ppo.patch_size = cfg.get_int("ppo", "patch_size");
  ppo.reward_scale = cfg.get_double("ppo", "reward_scale");
  ppo.validate();
  EpisodeConfig episode;
  episode.steps = cfg.get_int("episode", "steps");
  episode.gamma = ppo.gamma;
  episode.validate();
  const int checkpoint_every = cfg.get_int("ppo", "checkpoint_every");
  if (checkpoint_every < 0) throw ConfigError("ppo.checkpoint_every must be >= 0");
  const std::uint64_t seed = cfg.get_u64("run", "seed");
  const NetArchitecture arch = architecture_from(cfg);

  const std::vector<ImageGray> trainset = load_required(cfg, "data", "train_dir");
  TrainHooks hooks;
  if (!cfg.get("data", "holdout_dir").empty()) hooks.holdout = load_dataset(cfg.get("data", "holdout_dir"));
  hooks.holdout_patches = cfg.get_int("ppo", "holdout_patches");

  const fs::path out_dir = prepare_output(cfg);
  std::ofstream metrics = open_output(out_dir / "metrics.csv");
  write_metrics_header(metrics);
  metrics.flush();

  auto meta = [&](const EpochMetrics& m) {
    return nlohmann::json{{"epoch", m.epoch},
                          {"seed", seed},
                          {"holdout_psnr", m.holdout_psnr},
                          {"sigma_train", ppo.sigma_train},
                          {"steps", episode.steps}};
  };
  double best = -std::numeric_limits<double>::infinity();
  hooks.on_epoch = [&](const EpochMetrics& m, const PolicyValueNet& net) {
    write_metrics_row(metrics, m);
    metrics.flush();
    if (checkpoint_every > 0 && m.epoch % checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint_epoch_" << std::setw(4) << std::setfill('0') << m.epoch << ".bin";
      save_checkpoint(net, out_dir / name.str(), meta(m));
    }
    if (m.holdout_psnr > best) {
      best = m.holdout_psnr;
      save_checkpoint(net, out_dir / "best.bin", meta(m));
    }
    std::cout << "epoch " << m.epoch << " reward=" << m.mean_reward << " entropy=" << m.entropy
              << " value_loss=" << m.value_loss << " holdout_psnr=" << m.holdout_psnr << std::endl;
  };

  PolicyValueNet net(arch, seed);
  const std::vector<EpochMetrics> history = train(trainset, net, ppo, episode, seed, hooks);
  save_checkpoint(net, out_dir / "final.bin", history.empty() ? nlohmann::json::object() : meta(history.back()));
  std::cout << "parameters=" << net.parameter_count() << " best_holdout_psnr=" << best << '\n';
  return 0;
}

int cmd_deblur(const CommonOptions& opts) {
  const Config cfg = resolve_config(deblur_schema(), opts);
  if (opts.dump_config) {
    cfg.write(std::cout);
    return 0;
  }
  Restoration task;
  task.truth.kind = Degradation::Kind::Deblur;
  task.truth.kernel = kernel_from(cfg, cfg.get_double("degradation", "sigma_true"));
  task.truth.noise_sigma = cfg.get_double("degradation", "noise_sigma");
  task.truth.validate();
  task.est_sigmas = cfg.get_doubles("estimate", "sigmas");
  if (task.est_sigmas.empty()) throw ConfigError("estimate.sigmas must list at least one value");
  task.label = "deblur";
  task.file_prefix = "deblur";
  const auto images = load_required(cfg, "data", "eval_dir");
  const auto names = image_names(cfg, "data", "eval_dir");
  const auto bundle = load_prior(cfg);
  const fs::path out_dir = prepare_output(cfg);
  const auto rows = restore_set(cfg, out_dir, task, images, names, bundle->prior, cfg.get_bool("eval", "save_images"));
  if (opts.assert_trend) check_trend(rows, cfg.get_double("degradation", "sigma_true"), task.label);
  return 0;
}

int cmd_sisr(const CommonOptions& opts) {
  const Config cfg = resolve_config(sisr_schema(), opts);
  if (opts.dump_config) {
    cfg.write(std::cout);
    return 0;
  }
  const std::vector<int> factors = cfg.get_ints("degradation", "factors");
  if (factors.empty()) throw ConfigError("degradation.factors must list at least one factor");
  const std::vector<double> est = cfg.get_doubles("estimate", "sigmas");
  if (est.empty()) throw ConfigError("estimate.sigmas must list at least one value");
  const auto images = load_required(cfg, "data", "eval_dir");
  const auto names = image_names(cfg, "data", "eval_dir");
  const auto bundle = load_prior(cfg);
  const fs::path out_dir = prepare_output(cfg);
  for (int s : factors) {
    Restoration task;
    task.truth.kind = Degradation::Kind::SISR;
    task.truth.factor = s;
    task.truth.kernel = kernel_from(cfg, cfg.get_double("degradation", "sigma_true"));
    task.truth.noise_sigma = cfg.get_double("degradation", "noise_sigma");
    if (!task.truth.validate()) std::cerr << "warning: factor " << s << " is outside {2, 3, 4}\n";
    task.est_sigmas = est;
    task.label = "sisr_x" + std::to_string(s);
    task.file_prefix = task.label;
    const auto rows = restore_set(cfg, out_dir, task, images, names, bundle->prior, cfg.get_bool("eval", "save_images"));
    if (opts.assert_trend) check_trend(rows, cfg.get_double("degradation", "sigma_true"), task.label);
  }
  return 0;
}

int cmd_sweep(const CommonOptions& opts) {
  const Config cfg = resolve_config(sweep_schema(), opts);
  if (opts.dump_config) {
    cfg.write(std::cout);
    return 0;
  }
  bool run_deblur = false;
  bool run_sisr = false;
  {
    std::stringstream ss(cfg.get("sweep", "tasks"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
      if (item == "deblur") {
        run_deblur = true;
      } else if (item == "sisr") {
        run_sisr = true;
      } else if (!item.empty()) {
        throw ConfigError("sweep.tasks: unknown task '" + item + "'");
      }
    }
  }
  if (!run_deblur && !run_sisr) throw ConfigError("sweep.tasks selects nothing");
  const int kernel_size = cfg.get_int("sweep", "kernel_size");
  const double sigma_true = cfg.get_double("sweep", "sigma_true");
  const auto images = load_required(cfg, "data", "eval_dir");
  const auto bundle = load_prior(cfg);
  const fs::path out_dir = prepare_output(cfg);

  SweepSettings settings;
  settings.kernel_size = kernel_size;
  settings.seed = cfg.get_u64("run", "seed");
  settings.jobs = cfg.get_int("run", "jobs");
  if (!cfg.is_auto("eval", "border")) {
    settings.border = cfg.get_int("eval", "border");
    if (settings.border < 0) throw ConfigError("eval.border must be >= 0 or auto");
  }

  std::vector<std::string> failures;
  auto run_one = [&](const Degradation& truth, const std::vector<double>& sigmas, const std::string& label) {
    if (sigmas.empty()) throw ConfigError("sweep: empty sigma list for " + label);
    const PnPConfig base = pnp_from(cfg, truth.noise_sigma);
    std::vector<ImageGray> clean = images;
    if (truth.kind == Degradation::Kind::SISR) {
      for (ImageGray& img : clean) img = center_crop_to_multiple(img, truth.factor);
    }
    const auto rows = robustness_sweep(clean, truth, sigmas, base, bundle->prior, settings);
    std::ofstream out = open_output(out_dir / ("sweep_" + label + ".csv"));
    write_sweep_csv(out, rows);
    print_rows(label, rows);
    if (opts.assert_trend) {
      try {
        check_trend(rows, sigma_true, label);
      } catch (const TrendFailure& e) {
        failures.push_back(e.what());
      }
    }
  };

  if (run_deblur) {
    Degradation truth;
    truth.kind = Degradation::Kind::Deblur;
    truth.kernel = gaussian_kernel(kernel_size, sigma_true);
    truth.noise_sigma = cfg.get_double("sweep", "deblur_noise_sigma");
    truth.validate();
    run_one(truth, cfg.get_doubles("sweep", "deblur_sigmas"), "deblur");
  }
  if (run_sisr) {
    for (int s : cfg.get_ints("sweep", "factors")) {
      Degradation truth;
      truth.kind = Degradation::Kind::SISR;
      truth.factor = s;
      truth.kernel = gaussian_kernel(kernel_size, sigma_true);
      truth.noise_sigma = cfg.get_double("sweep", "sisr_noise_sigma");
      if (!truth.validate()) std::cerr << "warning: factor " << s << " is outside {2, 3, 4}\n";
      run_one(truth, cfg.get_doubles("sweep", "sisr_sigmas"), "sisr_x" + std::to_string(s));
    }
  }
  if (!failures.empty()) {
    std::string msg;
    for (const std::string& f : failures) msg += (msg.empty() ? "" : "; ") + f;
    throw TrendFailure(msg);
  }
  return 0;
}

int cmd_denoise(const DenoiseOptions& opts) {
  if (!fs::exists(opts.checkpoint)) throw DataError("checkpoint not found: " + opts.checkpoint.string());
  const PolicyValueNet net = load_checkpoint(opts.checkpoint);
  const ImageGray noisy = load_image(opts.input);
  EpisodeConfig episode;
  episode.steps = opts.steps;
  episode.validate();
  const ImageGray out = denoise_greedy(net, noisy, episode);
  save_image(out, opts.output);
  if (opts.reference) {
    const ImageGray ref = load_image(*opts.reference);
    std::cout << std::fixed << std::setprecision(4) << "input_psnr=" << psnr(ref, noisy)
              << " output_psnr=" << psnr(ref, out) << '\n';
  }
  return 0;
}

int cmd_psnr(const fs::path& reference, const fs::path& test, int border) {
  if (border < 0) throw ConfigError("border must be >= 0");
  const ImageGray a = load_image(reference);
  const ImageGray b = load_image(test);
  require_same_shape(a, b, "psnr");
  std::cout << std::fixed << std::setprecision(6) << psnr(crop_border(a, border), crop_border(b, border)) << '\n';
  return 0;
}

int cmd_verify_dataset(const VerifyOptions& opts) {
  const auto files = list_images(opts.dir);
  int count = 0;
  for (const fs::path& f : files) {
    const ImageGray img = load_image(f);
    std::cout << f.filename().string() << ' ' << img.height() << 'x' << img.width() << '\n';
    if (img.height() < opts.min_size || img.width() < opts.min_size) {
      throw DataError(f.string() + " is smaller than " + std::to_string(opts.min_size) + " pixels");
    }
    ++count;
  }
  std::cout << "count=" << count << '\n';
  if (count == 0) throw DataError("no PGM images in " + opts.dir.string());
  if (opts.expect_count && count != *opts.expect_count) {
    throw DataError("expected " + std::to_string(*opts.expect_count) + " images, found " + std::to_string(count));
  }
  return 0;
}

int cmd_make_synthetic(const SyntheticOptions& opts) {
  if (opts.count < 1 || opts.height < 8 || opts.width < 8) {
    throw ConfigError("make-synthetic needs count >= 1 and images of at least 8x8");
  }
  std::error_code ec;
  fs::create_directories(opts.out, ec);
  if (ec) throw DataError("cannot create " + opts.out.string());
  const auto set = synthetic_set(opts.count, opts.height, opts.width, opts.seed);
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::ostringstream name;
    name << "scene_" << std::setw(3) << std::setfill('0') << i << ".pgm";
    save_image(set[i], opts.out / name.str());
  }
  std::cout << "wrote " << set.size() << " images to " << opts.out.string() << '\n';
  return 0;
}

}  // namespace repnp::cli
