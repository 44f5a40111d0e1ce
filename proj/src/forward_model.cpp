#include "repnp/forward_model.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <string>

#include <fftw3.h>

#include "repnp/errors.hpp"

namespace repnp {

Kernel::Kernel(int size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {
  if (size < 1 || size % 2 == 0) throw ConfigError("kernel size must be odd and positive");
  if (weights_.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size)) {
    throw ConfigError("kernel weight count does not match size");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("kernel weights must be finite and non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("kernel weights must sum to 1");
}

Kernel Kernel::delta(int size) {
  if (size < 1 || size % 2 == 0) throw ConfigError("kernel size must be odd and positive");
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  w[static_cast<std::size_t>(size / 2) * size + size / 2] = 1.0;
  return Kernel(size, std::move(w));
}

Kernel gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw ConfigError("Gaussian kernel size must be odd and positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("Gaussian kernel sigma must be positive");
  const int c = size / 2;
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double d2 = static_cast<double>((i - c) * (i - c) + (j - c) * (j - c));
      w[static_cast<std::size_t>(i) * size + j] = std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= sum;
  return Kernel(size, std::move(w));
}

Kernel load_kernel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open kernel file " + path.string());
  int rows = 0;
  int cols = 0;
  if (!(in >> rows >> cols)) throw DataError(path.string() + ": missing kernel header");
  if (rows != cols || rows < 1 || rows % 2 == 0) {
    throw DataError(path.string() + ": kernel must be square with odd size");
  }
  std::vector<double> w(static_cast<std::size_t>(rows) * cols);
  for (double& v : w) {
    if (!(in >> v)) throw DataError(path.string() + ": truncated kernel weights");
  }
  double extra = 0.0;
  if (in >> extra) throw DataError(path.string() + ": trailing data after kernel weights");
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) throw DataError(path.string() + ": kernel weights must be non-negative");
    sum += v;
  }
  if (!(sum > 0.0)) throw DataError(path.string() + ": kernel weights sum to zero");
  for (double& v : w) v /= sum;
  return Kernel(rows, std::move(w));
}

// ---------------------------------------------------------------------------

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Fft2d::Fft2d(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw ShapeError("FFT dimensions must be positive");
  const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  Spectrum a(n);
  Spectrum b(n);
  std::lock_guard lock(fftw_planner_mutex());
  forward_plan_ = fftw_plan_dft_2d(height, width, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft_2d(height, width, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!forward_plan_ || !inverse_plan_) throw NumericalFault("FFTW planning failed");
}

Fft2d::~Fft2d() {
  std::lock_guard lock(fftw_planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

Spectrum Fft2d::forward(std::span<const double> real) const {
  const std::size_t n = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  if (real.size() != n) throw ShapeError("FFT input size mismatch");
  Spectrum in(real.begin(), real.end());
  Spectrum out(n);
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(in.data()), as_fftw(out.data()));
  return out;
}

std::vector<double> Fft2d::inverse(const Spectrum& spectrum) const {
  const std::size_t n = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  if (spectrum.size() != n) throw ShapeError("inverse FFT input size mismatch");
  Spectrum in = spectrum;
  Spectrum out(n);
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), as_fftw(in.data()), as_fftw(out.data()));
  std::vector<double> real(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) real[i] = out[i].real() * scale;
  return real;
}

namespace {

void require_kernel_fits(const Kernel& kernel, int height, int width) {
  if (kernel.size() > height || kernel.size() > width) {
    throw ShapeError("kernel of size " + std::to_string(kernel.size()) + " larger than " +
                     std::to_string(height) + "x" + std::to_string(width) + " image");
  }
}

}  // namespace

Spectrum kernel_spectrum(const Kernel& kernel, int height, int width) {
  require_kernel_fits(kernel, height, width);
  const int c = kernel.radius();
  std::vector<double> padded(static_cast<std::size_t>(height) * width, 0.0);
  for (int i = 0; i < kernel.size(); ++i) {
    const int r = ((i - c) % height + height) % height;
    for (int j = 0; j < kernel.size(); ++j) {
      const int col = ((j - c) % width + width) % width;
      padded[static_cast<std::size_t>(r) * width + col] += kernel(i, j);
    }
  }
  return Fft2d(height, width).forward(padded);
}

CircularConvolution::CircularConvolution(const Kernel& kernel, int height, int width)
    : fft_(height, width), spectrum_(kernel_spectrum(kernel, height, width)) {}

ImageGray CircularConvolution::apply(const ImageGray& img) const {
  if (img.height() != height() || img.width() != width()) throw ShapeError("convolution size mismatch");
  Spectrum s = fft_.forward(img.pixels());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= spectrum_[i];
  return ImageGray(img.height(), img.width(), fft_.inverse(s));
}

ImageGray CircularConvolution::apply_adjoint(const ImageGray& img) const {
  if (img.height() != height() || img.width() != width()) throw ShapeError("convolution size mismatch");
  Spectrum s = fft_.forward(img.pixels());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::conj(spectrum_[i]);
  return ImageGray(img.height(), img.width(), fft_.inverse(s));
}

ImageGray circular_convolve(const ImageGray& img, const Kernel& kernel) {
  return CircularConvolution(kernel, img.height(), img.width()).apply(img);
}

ImageGray subsample(const ImageGray& img, int factor) {
  if (factor < 1) throw ConfigError("subsampling factor must be positive");
  if (img.height() % factor != 0 || img.width() % factor != 0) {
    throw ShapeError("image dimensions not divisible by subsampling factor " + std::to_string(factor));
  }
  ImageGray out(img.height() / factor, img.width() / factor);
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) out(r, c) = img(r * factor, c * factor);
  }
  return out;
}

ImageGray upsample_zero(const ImageGray& img, int factor) {
  if (factor < 1) throw ConfigError("upsampling factor must be positive");
  ImageGray out(img.height() * factor, img.width() * factor, 0.0);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) out(r * factor, c * factor) = img(r, c);
  }
  return out;
}

ImageGray upsample_nearest(const ImageGray& img, int factor) {
  if (factor < 1) throw ConfigError("upsampling factor must be positive");
  ImageGray out(img.height() * factor, img.width() * factor);
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) out(r, c) = img(r / factor, c / factor);
  }
  return out;
}

bool Degradation::validate() const {
  if (kernel.size() < 1) throw ConfigError("degradation kernel is empty");
  if (factor < 1) throw ConfigError("subsampling factor must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise sigma must be non-negative");
  if (kind == Kind::Deblur && factor != 1) throw ConfigError("deblurring requires factor 1");
  if (kind == Kind::SISR) return factor >= 2 && factor <= 4;
  return true;
}

ImageGray degrade(const ImageGray& x, const Degradation& d, std::uint64_t seed) {
  d.validate();
  ImageGray blurred = circular_convolve(x, d.kernel);
  if (d.kind == Degradation::Kind::SISR) blurred = subsample(blurred, d.factor);
  return add_gaussian_noise(blurred, d.noise_sigma, seed);
}

ImageGray deblur_data_consistency(const ImageGray& y, const CircularConvolution& conv, const ImageGray& z,
                                  double mu) {
  require_same_shape(y, z, "deblur_data_consistency");
  if (!(mu > 0.0)) throw ConfigError("penalty mu must be positive");
  if (y.height() != conv.height() || y.width() != conv.width()) {
    throw ShapeError("deblur_data_consistency: operator size mismatch");
  }
  const Spectrum& k = conv.spectrum();
  Spectrum ys = conv.fft().forward(y.pixels());
  const Spectrum zs = conv.fft().forward(z.pixels());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    ys[i] = (std::conj(k[i]) * ys[i] + mu * zs[i]) / (std::norm(k[i]) + mu);
  }
  return ImageGray(y.height(), y.width(), conv.fft().inverse(ys));
}

ImageGray deblur_data_consistency(const ImageGray& y, const Kernel& kernel, const ImageGray& z, double mu) {
  return deblur_data_consistency(y, CircularConvolution(kernel, y.height(), y.width()), z, mu);
}

// ---------------------------------------------------------------------------

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

CGResult conjugate_gradient(const LinearOperator& apply_a, std::span<const double> b, double tol,
                            int max_iter, std::span<const double> x0) {
  if (!(tol > 0.0)) throw ConfigError("CG tolerance must be positive");
  if (max_iter < 1) throw ConfigError("CG max_iter must be positive");
  const std::size_t n = b.size();
  if (!x0.empty() && x0.size() != n) throw ShapeError("CG initial guess size mismatch");

  CGResult res;
  res.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> ap(n);
  if (!x0.empty()) {
    apply_a(res.x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ap[i];
  }
  std::vector<double> p = r;
  double rs = dot(r, r);
  res.residual = std::sqrt(rs) / b_norm;
  if (res.residual <= tol) return res;

  res.status = CGStatus::MaxIterations;
  for (int k = 0; k < max_iter; ++k) {
    apply_a(p, ap);
    const double curvature = dot(p, ap);
    if (!(curvature > 0.0)) {
      res.status = CGStatus::Breakdown;
      break;
    }
    const double alpha = rs / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rs_new = dot(r, r);
    ++res.iterations;
    res.residual_history.push_back(std::sqrt(rs_new) / b_norm);
    if (std::sqrt(rs_new) / b_norm <= tol) {
      res.status = CGStatus::Converged;
      break;
    }
    const double beta = rs_new / rs;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_new;
  }
  // Report the true residual rather than the recursively updated one.
  apply_a(res.x, ap);
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) rr += (b[i] - ap[i]) * (b[i] - ap[i]);
  res.residual = std::sqrt(rr) / b_norm;
  return res;
}

SisrSolve sisr_data_consistency(const ImageGray& y, const CircularConvolution& conv, int factor,
                                const ImageGray& z, double mu, const CGConfig& cg) {
  if (!(mu > 0.0)) throw ConfigError("penalty mu must be positive");
  if (factor < 1) throw ConfigError("subsampling factor must be positive");
  if (z.height() != y.height() * factor || z.width() != y.width() * factor) {
    throw ShapeError("sisr_data_consistency: z must be factor times the size of y");
  }
  if (z.height() != conv.height() || z.width() != conv.width()) {
    throw ShapeError("sisr_data_consistency: operator size mismatch");
  }
  const int h = z.height();
  const int w = z.width();
  const LinearOperator normal_op = [&](std::span<const double> in, std::span<double> out) {
    const ImageGray x(h, w, std::vector<double>(in.begin(), in.end()));
    const ImageGray back = conv.apply_adjoint(upsample_zero(subsample(conv.apply(x), factor), factor));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = back[i] + mu * in[i];
  };
  ImageGray rhs = conv.apply_adjoint(upsample_zero(y, factor));
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += mu * z[i];

  SisrSolve out;
  out.cg = conjugate_gradient(normal_op, rhs.pixels(), cg.tol, cg.max_iter, z.pixels());
  out.x = ImageGray(h, w, std::move(out.cg.x));
  out.cg.x.clear();
  return out;
}

SisrSolve sisr_data_consistency(const ImageGray& y, const Kernel& kernel, int factor, const ImageGray& z,
                                double mu, const CGConfig& cg) {
  return sisr_data_consistency(y, CircularConvolution(kernel, z.height(), z.width()), factor, z, mu, cg);
}

}  // namespace repnp
