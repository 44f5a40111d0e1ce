#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "repnp/image.hpp"

namespace repnp {

/// Square, odd-sized, non-negative convolution kernel normalised to sum 1.
class Kernel {
 public:
  Kernel() = default;
  /// Validates the invariants; throws ConfigError on violation.
  Kernel(int size, std::vector<double> weights);

  int size() const { return size_; }
  int radius() const { return size_ / 2; }
  double operator()(int row, int col) const {
    return weights_[static_cast<std::size_t>(row) * size_ + static_cast<std::size_t>(col)];
  }
  std::span<const double> weights() const { return weights_; }

  /// Delta kernel (identity operator).
  static Kernel delta(int size = 1);

 private:
  int size_ = 0;
  std::vector<double> weights_;
};

/// Isotropic Gaussian, weights proportional to exp(-(di^2 + dj^2) / (2 sigma^2)).
Kernel gaussian_kernel(int size, double sigma);

/// Plain-text kernel: "rows cols" header followed by rows*cols row-major
/// weights. The weights are renormalised to sum 1.
Kernel load_kernel(const std::filesystem::path& path);

using Spectrum = std::vector<std::complex<double>>;

/// 2-D DFT of real images of a fixed size (FFTW backed). Plans are created
/// once under a global lock; transforms may run concurrently on distinct
/// objects.
class Fft2d {
 public:
  Fft2d(int height, int width);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  int height() const { return height_; }
  int width() const { return width_; }

  Spectrum forward(std::span<const double> real) const;
  /// Inverse transform (normalised by 1/N); returns the real part.
  std::vector<double> inverse(const Spectrum& spectrum) const;

 private:
  int height_;
  int width_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Transfer function of a kernel on an H x W periodic grid: the kernel is
/// zero-padded with its centre moved to (0, 0), so a delta kernel maps to 1.
Spectrum kernel_spectrum(const Kernel& kernel, int height, int width);

/// Periodic convolution operator with a cached kernel spectrum.
class CircularConvolution {
 public:
  CircularConvolution(const Kernel& kernel, int height, int width);

  int height() const { return fft_.height(); }
  int width() const { return fft_.width(); }
  const Spectrum& spectrum() const { return spectrum_; }
  const Fft2d& fft() const { return fft_; }

  ImageGray apply(const ImageGray& img) const;
  /// Adjoint operator (convolution with the flipped kernel).
  ImageGray apply_adjoint(const ImageGray& img) const;

 private:
  Fft2d fft_;
  Spectrum spectrum_;
};

/// out(r, c) = sum_{i,j} k(i, j) * img((r - i + c0) mod H, (c - j + c0) mod W).
ImageGray circular_convolve(const ImageGray& img, const Kernel& kernel);

/// Keeps every factor-th pixel starting at offset 0.
ImageGray subsample(const ImageGray& img, int factor);

/// Adjoint of subsample: places pixels on the factor-spaced grid, zeros
/// elsewhere.
ImageGray upsample_zero(const ImageGray& img, int factor);

/// Nearest-neighbour (zero-order hold) upsampling.
ImageGray upsample_nearest(const ImageGray& img, int factor);

struct Degradation {
  enum class Kind { Deblur, SISR };
  Kind kind = Kind::Deblur;
  Kernel kernel = Kernel::delta();
  int factor = 1;
  double noise_sigma = 0.0;

  /// Throws ConfigError on invalid combinations. Returns false for SISR
  /// factors outside {2, 3, 4} (allowed, but flagged).
  bool validate() const;
};

/// y = Hx + n. Deblur: circular convolution; SISR: convolution followed by
/// subsampling. Gaussian noise is added without clipping.
ImageGray degrade(const ImageGray& x, const Degradation& d, std::uint64_t seed);

/// Exact minimiser of ||Hx - y||^2 + mu ||x - z||^2 for circulant H:
/// X = (conj(K) Y + mu Z) / (|K|^2 + mu) per frequency.
ImageGray deblur_data_consistency(const ImageGray& y, const Kernel& kernel, const ImageGray& z, double mu);

/// Same solve with a precomputed convolution operator.
ImageGray deblur_data_consistency(const ImageGray& y, const CircularConvolution& conv, const ImageGray& z,
                                  double mu);

struct CGConfig {
  double tol = 1e-6;
  int max_iter = 100;
};

enum class CGStatus { Converged, MaxIterations, Breakdown };

struct CGResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;  // ||Ax - b|| / ||b||
  CGStatus status = CGStatus::Converged;
  std::vector<double> residual_history;  // relative residual after each iteration
};

using LinearOperator = std::function<void(std::span<const double> in, std::span<double> out)>;

/// Conjugate gradients for a symmetric positive definite operator, starting
/// from `x0` (zero when empty). Stops when ||Ax - b|| / ||b|| <= tol, after
/// `max_iter` iterations (returning the last iterate, which has the lowest
/// A-norm error seen), or on non-positive curvature (Breakdown).
CGResult conjugate_gradient(const LinearOperator& apply_a, std::span<const double> b, double tol,
                            int max_iter, std::span<const double> x0 = {});

struct SisrSolve {
  ImageGray x;
  CGResult cg;  // x is moved out of cg
};

/// Approximate minimiser of ||SGx - y||^2 + mu ||x - z||^2 by CG on
/// (G^T S^T S G + mu I) x = G^T S^T y + mu z, warm-started at z.
SisrSolve sisr_data_consistency(const ImageGray& y, const Kernel& kernel, int factor, const ImageGray& z,
                                double mu, const CGConfig& cg = {});

SisrSolve sisr_data_consistency(const ImageGray& y, const CircularConvolution& conv, int factor,
                                const ImageGray& z, double mu, const CGConfig& cg = {});

}  // namespace repnp
