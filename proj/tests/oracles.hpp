#pragma once

// Test-only reference implementations. Nothing here calls into the FFT or
// CG code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "repnp/forward_model.hpp"
#include "repnp/image.hpp"

namespace repnp::oracle {

inline ImageGray random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ImageGray img(h, w);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

inline Kernel random_kernel(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  double sum = 0.0;
  for (double& v : w) sum += (v = u(rng));
  for (double& v : w) v /= sum;
  // Exact renormalisation can leave the sum a few ulps away from 1.
  return Kernel(size, std::move(w));
}

/// Spatial-domain periodic convolution, O(N k^2).
inline ImageGray brute_force_convolve(const ImageGray& img, const Kernel& k) {
  const int h = img.height();
  const int w = img.width();
  const int c0 = k.radius();
  ImageGray out(h, w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = 0; i < k.size(); ++i) {
        for (int j = 0; j < k.size(); ++j) {
          const int rr = ((r - i + c0) % h + h) % h;
          const int cc = ((c - j + c0) % w + w) % w;
          acc += k(i, j) * img(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

/// Explicit N x N circulant matrix of periodic convolution (N = h * w).
inline Eigen::MatrixXd dense_circulant(const Kernel& k, int h, int w) {
  const int n = h * w;
  const int c0 = k.radius();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int i = 0; i < k.size(); ++i) {
        for (int j = 0; j < k.size(); ++j) {
          const int rr = ((r - i + c0) % h + h) % h;
          const int cc = ((c - j + c0) % w + w) % w;
          m(r * w + c, rr * w + cc) += k(i, j);
        }
      }
    }
  }
  return m;
}

/// Explicit (h/s * w/s) x (h * w) subsampling matrix with offset 0.
inline Eigen::MatrixXd dense_subsample(int h, int w, int s) {
  const int lh = h / s;
  const int lw = w / s;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(lh * lw, h * w);
  for (int r = 0; r < lh; ++r) {
    for (int c = 0; c < lw; ++c) m(r * lw + c, (r * s) * w + c * s) = 1.0;
  }
  return m;
}

inline Eigen::VectorXd to_vector(const ImageGray& img) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(img.size()));
  for (std::size_t i = 0; i < img.size(); ++i) v(static_cast<Eigen::Index>(i)) = img[i];
  return v;
}

inline ImageGray to_image(const Eigen::VectorXd& v, int h, int w) {
  ImageGray img(h, w);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = v(static_cast<Eigen::Index>(i));
  return img;
}

/// Solves (A^T A + mu I) x = A^T y + mu z with a dense LDL^T factorisation.
inline Eigen::VectorXd dense_regularized_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& z, double mu) {
  const Eigen::MatrixXd normal =
      a.transpose() * a + mu * Eigen::MatrixXd::Identity(a.cols(), a.cols());
  return normal.ldlt().solve(a.transpose() * y + mu * z);
}

inline double max_abs_diff(const ImageGray& a, const ImageGray& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace repnp::oracle
