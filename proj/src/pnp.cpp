#include "repnp/pnp.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "repnp/errors.hpp"
#include "repnp/parallel.hpp"

namespace repnp {

double sigma_schedule(int k, int iterations, double sigma_start, double sigma_end) {
  if (iterations < 2) throw ConfigError("sigma schedule needs at least two iterations");
  if (!(sigma_end > 0.0 && sigma_end < sigma_start)) {
    throw ConfigError("sigma schedule requires 0 < sigma_end < sigma_start");
  }
  if (k < 0 || k >= iterations) throw ConfigError("sigma schedule index out of range");
  if (k == 0) return sigma_start;
  if (k == iterations - 1) return sigma_end;
  const double t = static_cast<double>(k) / static_cast<double>(iterations - 1);
  return sigma_start * std::pow(sigma_end / sigma_start, t);
}

double resolve_sigma_end(double noise_sigma) { return std::max(noise_sigma, kSigmaEndFloor); }

double default_lambda(double sigma_end) { return 0.23 * sigma_end * sigma_end; }

void PnPConfig::validate() const {
  if (iterations < 1) throw ConfigError("PnP needs at least one iteration");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  if (!(sigma_start > 0.0)) throw ConfigError("sigma_start must be positive");
  if (iterations >= 2 && !(sigma_end > 0.0 && sigma_end < sigma_start)) {
    throw ConfigError("PnP schedule requires 0 < sigma_end < sigma_start");
  }
  degradation_est.validate();
}

std::vector<double> PnPConfig::sigmas() const {
  if (iterations == 1) return {sigma_start};
  std::vector<double> out;
  for (int k = 0; k < iterations; ++k) out.push_back(sigma_schedule(k, iterations, sigma_start, sigma_end));
  return out;
}

std::vector<double> PnPConfig::mus() const {
  std::vector<double> out;
  for (double s : sigmas()) out.push_back(lambda / (s * s));
  return out;
}

ImageGray default_initialization(const ImageGray& y, const Degradation& d) {
  if (d.kind == Degradation::Kind::SISR) return upsample_nearest(y, d.factor);
  return y;
}

PnPResult run_pnp(const ImageGray& y, const PnPConfig& cfg, const DenoiserPrior& prior,
                  const std::optional<ImageGray>& init, const std::optional<ImageGray>& ground_truth) {
  cfg.validate();
  const Degradation& model = cfg.degradation_est;
  const bool sisr = model.kind == Degradation::Kind::SISR;
  ImageGray z = init ? *init : default_initialization(y, model);
  const int h = sisr ? y.height() * model.factor : y.height();
  const int w = sisr ? y.width() * model.factor : y.width();
  if (z.height() != h || z.width() != w) throw ShapeError("run_pnp: initial estimate has the wrong size");
  if (ground_truth && (ground_truth->height() != h || ground_truth->width() != w)) {
    throw ShapeError("run_pnp: ground truth has the wrong size");
  }

  // The kernel spectrum is fixed for the whole run.
  const CircularConvolution conv(model.kernel, h, w);
  const std::vector<double> sigmas = cfg.sigmas();
  PnPResult result;
  for (int k = 0; k < cfg.iterations; ++k) {
    PnPTraceEntry entry;
    entry.iteration = k;
    entry.sigma = sigmas[static_cast<std::size_t>(k)];
    entry.mu = cfg.lambda / (entry.sigma * entry.sigma);
    ImageGray x;
    if (sisr) {
      SisrSolve solve = sisr_data_consistency(y, conv, model.factor, z, entry.mu, cfg.cg);
      if (solve.cg.status == CGStatus::Breakdown) {
        throw NumericalFault("CG breakdown in PnP iteration " + std::to_string(k));
      }
      entry.cg_iterations = solve.cg.iterations;
      entry.cg_residual = solve.cg.residual;
      x = std::move(solve.x);
    } else {
      x = deblur_data_consistency(y, conv, z, entry.mu);
    }
    for (double v : x.pixels()) {
      if (!std::isfinite(v)) throw NumericalFault("non-finite data-consistency iterate at PnP iteration " + std::to_string(k));
    }
    z = prior(x, entry.sigma);
    for (double v : z.pixels()) {
      if (!std::isfinite(v)) throw NumericalFault("non-finite prior iterate at PnP iteration " + std::to_string(k));
    }
    if (ground_truth) entry.psnr = psnr(*ground_truth, z);
    result.trace.push_back(entry);
  }
  result.restored = std::move(z);
  return result;
}

void write_trace_csv(std::ostream& out, const std::vector<PnPTraceEntry>& trace) {
  out << "iteration,sigma,mu,psnr,cg_iterations,cg_residual\n";
  out << std::setprecision(10);
  for (const PnPTraceEntry& e : trace) {
    out << e.iteration << ',' << e.sigma << ',' << e.mu << ',';
    if (e.psnr) out << *e.psnr;
    out << ',' << e.cg_iterations << ',' << e.cg_residual << '\n';
  }
}

RestorationRecord restore_one(const ImageGray& clean, const Degradation& truth, const PnPConfig& cfg,
                              const DenoiserPrior& prior, std::uint64_t seed, int border) {
  RestorationRecord rec;
  const ImageGray y = degrade(clean, truth, seed);
  rec.degraded = truth.kind == Degradation::Kind::SISR ? upsample_nearest(y, truth.factor) : y;
  rec.restored = run_pnp(y, cfg, prior).restored;
  const ImageGray ref = crop_border(clean, border);
  rec.degraded_psnr = psnr(ref, crop_border(rec.degraded, border));
  rec.restored_psnr = psnr(ref, crop_border(rec.restored, border));
  return rec;
}

std::vector<SweepRow> robustness_sweep(const std::vector<ImageGray>& clean_set, const Degradation& truth,
                                       const std::vector<double>& est_sigmas, const PnPConfig& base,
                                       const DenoiserPrior& prior, const SweepSettings& settings) {
  if (clean_set.empty()) throw DataError("robustness sweep needs at least one image");
  if (est_sigmas.empty()) throw ConfigError("robustness sweep needs at least one sigma_est");
  truth.validate();
  const int border = settings.border >= 0 ? settings.border : settings.kernel_size / 2;

  // Observations are fixed per image so the sweep isolates the model error.
  std::vector<ImageGray> observations(clean_set.size());
  for (std::size_t i = 0; i < clean_set.size(); ++i) {
    observations[i] = degrade(clean_set[i], truth, settings.seed + i);
  }

  std::vector<SweepRow> rows;
  for (double sigma_est : est_sigmas) {
    PnPConfig cfg = base;
    cfg.degradation_est.kind = truth.kind;
    cfg.degradation_est.factor = truth.factor;
    cfg.degradation_est.noise_sigma = truth.noise_sigma;
    cfg.degradation_est.kernel = gaussian_kernel(settings.kernel_size, sigma_est);

    SweepRow row;
    row.sigma_est = sigma_est;
    row.n_images = static_cast<int>(clean_set.size());
    row.per_image.assign(clean_set.size(), 0.0);
    parallel_for(clean_set.size(), settings.jobs, [&](std::size_t i) {
      const ImageGray restored = run_pnp(observations[i], cfg, prior).restored;
      row.per_image[i] = psnr(crop_border(clean_set[i], border), crop_border(restored, border));
    });
    row.mean_psnr = std::accumulate(row.per_image.begin(), row.per_image.end(), 0.0) / row.n_images;
    double ss = 0.0;
    for (double v : row.per_image) ss += (v - row.mean_psnr) * (v - row.mean_psnr);
    row.std_psnr = row.n_images > 1 ? std::sqrt(ss / (row.n_images - 1)) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "sigma_est,mean_psnr,std_psnr,n_images\n";
  for (const SweepRow& r : rows) {
    out << std::setprecision(10) << r.sigma_est << ',' << r.mean_psnr << ',' << r.std_psnr << ','
        << r.n_images << '\n';
  }
}

bool strictly_decreasing(const std::vector<SweepRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].mean_psnr < rows[i - 1].mean_psnr)) return false;
  }
  return true;
}

}  // namespace repnp
