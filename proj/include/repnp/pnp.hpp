#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "repnp/denoiser.hpp"
#include "repnp/forward_model.hpp"
#include "repnp/image.hpp"

namespace repnp {

/// Geometric interpolation sigma_k = start * (end / start)^(k / (K - 1)).
/// Requires K >= 2 and 0 < end < start; endpoints are returned exactly.
double sigma_schedule(int k, int iterations, double sigma_start, double sigma_end);

/// Smallest sigma_end the schedule accepts; used when the noise level is 0.
inline constexpr double kSigmaEndFloor = 1.0;

/// sigma_end = max(noise_sigma, floor).
double resolve_sigma_end(double noise_sigma);

/// lambda = 0.23 * sigma_end^2.
double default_lambda(double sigma_end);

struct PnPConfig {
  int iterations = 30;
  double sigma_start = 50.0;
  double sigma_end = 7.65;
  double lambda = 0.23 * 7.65 * 7.65;
  /// Degradation model used inside the solver (may differ from the truth).
  Degradation degradation_est;
  CGConfig cg;

  void validate() const;
  /// sigma_k for k = 0..K-1. A single iteration uses sigma_start.
  std::vector<double> sigmas() const;
  /// mu_k = lambda / sigma_k^2.
  std::vector<double> mus() const;
};

struct PnPTraceEntry {
  int iteration = 0;
  double sigma = 0.0;
  double mu = 0.0;
  /// PSNR of z^{k+1} against the ground truth, when one was supplied.
  std::optional<double> psnr;
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

struct PnPResult {
  ImageGray restored;
  std::vector<PnPTraceEntry> trace;
};

/// Initial z: y for deblurring, nearest-neighbour upsampling for SISR.
ImageGray default_initialization(const ImageGray& y, const Degradation& d);

/// Half-quadratic splitting: x = data-consistency(y, z, mu_k) (spectral for
/// deblurring, CG for SISR) followed by z = prior(x, sigma_k). Throws
/// NumericalFault naming the iteration if an iterate goes non-finite.
PnPResult run_pnp(const ImageGray& y, const PnPConfig& cfg, const DenoiserPrior& prior,
                  const std::optional<ImageGray>& init = std::nullopt,
                  const std::optional<ImageGray>& ground_truth = std::nullopt);

void write_trace_csv(std::ostream& out, const std::vector<PnPTraceEntry>& trace);

/// Restoration of one image under a (true degradation, solver model) pair.
struct RestorationRecord {
  double degraded_psnr = 0.0;  // y (upsampled for SISR) vs truth, border-cropped
  double restored_psnr = 0.0;  // restored vs truth, border-cropped
  ImageGray degraded;
  ImageGray restored;
};

/// Degrades `clean` with `truth` (noise seed `seed`), restores with
/// `cfg.degradation_est`, and scores both after cropping `border` pixels.
RestorationRecord restore_one(const ImageGray& clean, const Degradation& truth, const PnPConfig& cfg,
                              const DenoiserPrior& prior, std::uint64_t seed, int border);

struct SweepRow {
  double sigma_est = 0.0;
  double mean_psnr = 0.0;
  double std_psnr = 0.0;  // sample standard deviation
  int n_images = 0;
  std::vector<double> per_image;
};

struct SweepSettings {
  int kernel_size = 25;
  /// Border excluded from PSNR; negative selects the kernel radius.
  int border = -1;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// For every sigma_est: degrade each image with `truth`, restore with a
/// Gaussian kernel of std sigma_est inside the solver, and report mean PSNR.
/// The degraded observations are identical across sigma_est values.
std::vector<SweepRow> robustness_sweep(const std::vector<ImageGray>& clean_set, const Degradation& truth,
                                       const std::vector<double>& est_sigmas, const PnPConfig& base,
                                       const DenoiserPrior& prior, const SweepSettings& settings);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// True when mean PSNR strictly decreases along the rows.
bool strictly_decreasing(const std::vector<SweepRow>& rows);

}  // namespace repnp
