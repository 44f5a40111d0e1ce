#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "oracles.hpp"
#include "repnp/errors.hpp"
#include "repnp/forward_model.hpp"

namespace fs = std::filesystem;
using namespace repnp;

namespace {

double inner(const ImageGray& a, const ImageGray& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

ImageGray axpy(double a, const ImageGray& x, double b, const ImageGray& y) {
  ImageGray out(x.height(), x.width());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

}  // namespace

TEST(Kernel, InvariantsEnforced) {
  EXPECT_THROW(Kernel(2, std::vector<double>(4, 0.25)), ConfigError);
  EXPECT_THROW(Kernel(3, std::vector<double>(9, 0.1)), ConfigError);
  std::vector<double> neg(9, 0.0);
  neg[0] = -0.5;
  neg[1] = 1.5;
  EXPECT_THROW(Kernel(3, neg), ConfigError);
  EXPECT_THROW(Kernel(3, std::vector<double>(8, 0.125)), ConfigError);
  EXPECT_NO_THROW(Kernel::delta(5));
}

TEST(GaussianKernel, NormalisedAndIsotropic) {
  for (int size : {1, 3, 5, 11, 25}) {
    for (double sigma : {0.3, 1.0, 2.0, 2.8, 10.0}) {
      const Kernel k = gaussian_kernel(size, sigma);
      const auto w = k.weights();
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
      const int n = size - 1;
      for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
          const double v = k(i, j);
          EXPECT_DOUBLE_EQ(v, k(j, i));
          EXPECT_DOUBLE_EQ(v, k(n - i, j));
          EXPECT_DOUBLE_EQ(v, k(i, n - j));
          EXPECT_DOUBLE_EQ(v, k(n - j, n - i));
        }
      }
    }
  }
  EXPECT_THROW(gaussian_kernel(4, 1.0), ConfigError);
  EXPECT_THROW(gaussian_kernel(5, 0.0), ConfigError);
}

TEST(GaussianKernel, CentreWeightSize25Sigma2) {
  // Discrete normalisation computed here as a separable sum.
  double s1 = 0.0;
  for (int d = -12; d <= 12; ++d) s1 += std::exp(-d * d / 8.0);
  const double expected = 1.0 / (s1 * s1);
  const Kernel k = gaussian_kernel(25, 2.0);
  EXPECT_NEAR(k(12, 12), expected, 1e-10);
  EXPECT_NEAR(k(12, 12), 0.03978873579496415, 1e-10);
}

TEST(LoadKernel, ParsesAndRenormalises) {
  const fs::path dir = fs::temp_directory_path() / "repnp_fm_tests";
  fs::create_directories(dir);
  const fs::path p = dir / "k.txt";
  {
    std::ofstream out(p);
    out << "3 3\n0 1 0\n1 4 1\n0 1 0\n";
  }
  const Kernel k = load_kernel(p);
  EXPECT_EQ(k.size(), 3);
  EXPECT_DOUBLE_EQ(k(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(k(0, 1), 0.125);
  const fs::path bad = dir / "bad.txt";
  {
    std::ofstream out(bad);
    out << "2 2\n1 1 1 1\n";
  }
  EXPECT_THROW(load_kernel(bad), DataError);
  EXPECT_THROW(load_kernel(dir / "missing.txt"), DataError);
}

TEST(CircularConvolve, DeltaAndConstant) {
  const ImageGray img = oracle::random_image(9, 13, 1);
  EXPECT_LT(oracle::max_abs_diff(circular_convolve(img, Kernel::delta(5)), img), 1e-12);
  const ImageGray flat(10, 10, 77.0);
  const ImageGray out = circular_convolve(flat, oracle::random_kernel(5, 2));
  for (double v : out.pixels()) EXPECT_NEAR(v, 77.0, 1e-10);
}

TEST(CircularConvolve, MatchesSpatialLoop16x16Gaussian) {
  const ImageGray img = oracle::random_image(16, 16, 3);
  const Kernel k = gaussian_kernel(5, 1.3);
  EXPECT_LT(oracle::max_abs_diff(circular_convolve(img, k), oracle::brute_force_convolve(img, k)), 1e-9);
}

TEST(CircularConvolve, KernelLargerThanImage) {
  EXPECT_THROW(circular_convolve(ImageGray(4, 8), gaussian_kernel(5, 1.0)), ShapeError);
}

TEST(CircularConvolution, AdjointIsFlippedKernel) {
  const Kernel k = oracle::random_kernel(3, 4);
  std::vector<double> flipped(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) flipped[static_cast<std::size_t>(i * 3 + j)] = k(2 - i, 2 - j);
  const Kernel kf(3, flipped);
  const ImageGray img = oracle::random_image(8, 10, 5);
  const CircularConvolution conv(k, 8, 10);
  EXPECT_LT(oracle::max_abs_diff(conv.apply_adjoint(img), oracle::brute_force_convolve(img, kf)), 1e-10);
}

TEST(Subsample, EvenIndicesAndShapes) {
  const ImageGray img = oracle::random_image(8, 8, 6);
  const ImageGray s = subsample(img, 2);
  ASSERT_EQ(s.height(), 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(s(r, c), img(2 * r, 2 * c));
  EXPECT_THROW(subsample(ImageGray(9, 8), 2), ShapeError);
  const ImageGray u = upsample_nearest(s, 2);
  EXPECT_EQ(u(3, 5), s(1, 2));
  const ImageGray z = upsample_zero(s, 2);
  EXPECT_EQ(z(2, 4), s(1, 2));
  EXPECT_EQ(z(3, 4), 0.0);
}

TEST(Degrade, DeltaKernelNoNoiseIsIdentity) {
  const ImageGray img = oracle::random_image(12, 12, 7);
  Degradation d;
  d.kernel = Kernel::delta(3);
  EXPECT_LT(oracle::max_abs_diff(degrade(img, d, 1), img), 1e-12);
}

TEST(Degrade, SisrFactor2IsBlurAtEvenIndices) {
  const ImageGray img = oracle::random_image(8, 8, 8);
  Degradation d;
  d.kind = Degradation::Kind::SISR;
  d.factor = 2;
  d.kernel = gaussian_kernel(3, 0.8);
  const ImageGray y = degrade(img, d, 1);
  const ImageGray blurred = oracle::brute_force_convolve(img, d.kernel);
  ASSERT_EQ(y.height(), 4);
  ASSERT_EQ(y.width(), 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(y(r, c), blurred(2 * r, 2 * c), 1e-10);
}

TEST(Degrade, NoiseIsSeededAndUnclipped) {
  const ImageGray img(24, 24, 254.0);
  Degradation d;
  d.kernel = gaussian_kernel(5, 2.0);
  d.noise_sigma = 7.65;
  EXPECT_EQ(degrade(img, d, 9), degrade(img, d, 9));
  const ImageGray y = degrade(img, d, 9);
  EXPECT_GT(*std::max_element(y.pixels().begin(), y.pixels().end()), 255.0);
}

TEST(Degradation, Validation) {
  Degradation d;
  d.factor = 2;
  EXPECT_THROW(d.validate(), ConfigError);
  d.kind = Degradation::Kind::SISR;
  EXPECT_TRUE(d.validate());
  d.factor = 5;
  EXPECT_FALSE(d.validate());
  d.noise_sigma = -1.0;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(DeblurDataConsistency, DeltaKernelClosedForm) {
  const ImageGray y = oracle::random_image(10, 10, 9);
  const ImageGray z = oracle::random_image(10, 10, 10);
  const double mu = 0.7;
  const ImageGray x = deblur_data_consistency(y, Kernel::delta(3), z, mu);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], (y[i] + mu * z[i]) / (1.0 + mu), 1e-10);
}

TEST(DeblurDataConsistency, LargePenaltyReturnsZ) {
  const ImageGray y = oracle::random_image(16, 16, 11);
  const ImageGray z = oracle::random_image(16, 16, 12);
  const ImageGray x = deblur_data_consistency(y, gaussian_kernel(5, 2.0), z, 1e6);
  EXPECT_LT(oracle::max_abs_diff(x, z), 1e-3);
}

TEST(DeblurDataConsistency, MatchesDenseSolveMuHalf) {
  const int n = 12;
  const ImageGray y = oracle::random_image(n, n, 13);
  const ImageGray z = oracle::random_image(n, n, 14);
  const Kernel k = oracle::random_kernel(3, 15);
  const Eigen::MatrixXd h = oracle::dense_circulant(k, n, n);
  const Eigen::VectorXd ref = oracle::dense_regularized_solve(h, oracle::to_vector(y), oracle::to_vector(z), 0.5);
  const ImageGray x = deblur_data_consistency(y, k, z, 0.5);
  EXPECT_LT(oracle::max_abs_diff(x, oracle::to_image(ref, n, n)), 1e-8);
}

TEST(DeblurDataConsistency, StationaryPointOfObjective) {
  const ImageGray y = oracle::random_image(20, 18, 16);
  const ImageGray z = oracle::random_image(20, 18, 17);
  const Kernel k = gaussian_kernel(7, 1.5);
  const double mu = 0.05;
  const ImageGray x = deblur_data_consistency(y, k, z, mu);
  const ImageGray hx = oracle::brute_force_convolve(x, k);
  const CircularConvolution conv(k, 20, 18);
  const ImageGray grad = conv.apply_adjoint(axpy(1.0, hx, -1.0, y));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(grad[i] + mu * (x[i] - z[i])), 1e-6);
}

TEST(DeblurDataConsistency, JointlyLinear) {
  const Kernel k = gaussian_kernel(5, 1.2);
  const ImageGray y1 = oracle::random_image(14, 14, 18);
  const ImageGray y2 = oracle::random_image(14, 14, 19);
  const ImageGray z1 = oracle::random_image(14, 14, 20);
  const ImageGray z2 = oracle::random_image(14, 14, 21);
  const double a = 0.3;
  const double b = -1.7;
  const ImageGray lhs = deblur_data_consistency(axpy(a, y1, b, y2), k, axpy(a, z1, b, z2), 0.4);
  const ImageGray rhs =
      axpy(a, deblur_data_consistency(y1, k, z1, 0.4), b, deblur_data_consistency(y2, k, z2, 0.4));
  EXPECT_LT(oracle::max_abs_diff(lhs, rhs), 1e-9);
}

TEST(DeblurDataConsistency, Errors) {
  const ImageGray y(8, 8);
  EXPECT_THROW(deblur_data_consistency(y, Kernel::delta(3), ImageGray(8, 9), 1.0), ShapeError);
  EXPECT_THROW(deblur_data_consistency(y, Kernel::delta(3), y, 0.0), ConfigError);
}

TEST(DeblurDataConsistency, ReducesSurrogateObjective) {
  const Kernel k = gaussian_kernel(5, 2.0);
  const ImageGray y = oracle::random_image(12, 12, 22);
  const ImageGray z = oracle::random_image(12, 12, 23);
  const double mu = 0.3;
  auto objective = [&](const ImageGray& x) {
    const ImageGray r = axpy(1.0, oracle::brute_force_convolve(x, k), -1.0, y);
    const ImageGray d = axpy(1.0, x, -1.0, z);
    return inner(r, r) + mu * inner(d, d);
  };
  EXPECT_LT(objective(deblur_data_consistency(y, k, z, mu)), objective(z));
}

TEST(Adjoint, BlurAndSubsample) {
  const Kernel k = oracle::random_kernel(5, 24);
  const CircularConvolution conv(k, 12, 12);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ImageGray x = oracle::random_image(12, 12, 100 + s, -1.0, 1.0);
    const ImageGray u = oracle::random_image(12, 12, 200 + s, -1.0, 1.0);
    const ImageGray v = oracle::random_image(6, 6, 300 + s, -1.0, 1.0);
    EXPECT_NEAR(inner(conv.apply(x), u), inner(x, conv.apply_adjoint(u)), 1e-10);
    EXPECT_NEAR(inner(subsample(x, 2), v), inner(x, upsample_zero(v, 2)), 1e-10);
  }
}

TEST(ConjugateGradient, IdentityOneIteration) {
  const std::vector<double> b{1.0, -2.0, 3.0, 0.5};
  const LinearOperator id = [](std::span<const double> in, std::span<double> out) {
    std::copy(in.begin(), in.end(), out.begin());
  };
  const CGResult r = conjugate_gradient(id, b, 1e-10, 10);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.status, CGStatus::Converged);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.x[i], b[i], 1e-14);
}

TEST(ConjugateGradient, Diagonal) {
  std::vector<double> b(8);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (double& v : b) v = nd(rng);
  const LinearOperator diag = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(i + 1) * in[i];
  };
  const double tol = 1e-10;
  const CGResult r = conjugate_gradient(diag, b, tol, 50);
  EXPECT_EQ(r.status, CGStatus::Converged);
  EXPECT_LE(r.iterations, 8);
  double bn = 0.0;
  for (double v : b) bn += v * v;
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.x[i], b[i] / (i + 1), tol * std::sqrt(bn));
}

TEST(ConjugateGradient, RandomSpdMatchesDense) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) m(i, j) = nd(rng);
  const Eigen::MatrixXd a = m.transpose() * m + 0.5 * Eigen::MatrixXd::Identity(20, 20);
  Eigen::VectorXd b(20);
  for (int i = 0; i < 20; ++i) b(i) = nd(rng);
  const Eigen::VectorXd ref = a.llt().solve(b);
  const LinearOperator op = [&](std::span<const double> in, std::span<double> out) {
    const Eigen::VectorXd v = a * Eigen::Map<const Eigen::VectorXd>(in.data(), 20);
    std::copy(v.data(), v.data() + 20, out.begin());
  };
  const CGResult r = conjugate_gradient(op, std::span<const double>(b.data(), 20), 1e-14, 200);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(r.x[static_cast<std::size_t>(i)], ref(i), 1e-8);
}

TEST(ConjugateGradient, EnergyNormErrorIsMonotone) {
  // CG minimises the A-norm error over growing Krylov spaces, so that error
  // never increases. The residual 2-norm carries no such guarantee.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const int n = 30;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
  const Eigen::MatrixXd a = m.transpose() * m + 0.1 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) b(i) = nd(rng);
  const Eigen::VectorXd exact = a.ldlt().solve(b);
  const LinearOperator op = [&](std::span<const double> in, std::span<double> out) {
    const Eigen::VectorXd v = a * Eigen::Map<const Eigen::VectorXd>(in.data(), n);
    std::copy(v.data(), v.data() + n, out.begin());
  };
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= n; ++k) {
    const CGResult r = conjugate_gradient(op, std::span<const double>(b.data(), n), 1e-300, k);
    const Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(r.x.data(), n) - exact;
    const double energy = e.dot(a * e);
    EXPECT_LE(energy, previous * (1.0 + 1e-9) + 1e-20) << "iteration " << k;
    previous = energy;
  }
}

TEST(ConjugateGradient, ResidualHistoryNonIncreasingOnSisrSystem) {
  const ImageGray z = oracle::random_image(24, 24, 25);
  const ImageGray y = oracle::random_image(12, 12, 26);
  const SisrSolve s = sisr_data_consistency(y, gaussian_kernel(5, 1.5), 2, z, 0.2, {1e-12, 200});
  ASSERT_GE(s.cg.residual_history.size(), 2u);
  for (std::size_t i = 1; i < s.cg.residual_history.size(); ++i) {
    EXPECT_LE(s.cg.residual_history[i], s.cg.residual_history[i - 1] * (1.0 + 1e-12));
  }
}

TEST(ConjugateGradient, BreakdownOnIndefiniteOperator) {
  const LinearOperator neg = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = -in[i];
  };
  const std::vector<double> b{1.0, 2.0};
  EXPECT_EQ(conjugate_gradient(neg, b, 1e-8, 10).status, CGStatus::Breakdown);
}

TEST(ConjugateGradient, MaxIterationsReportsResidual) {
  const LinearOperator diag = [](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::pow(10.0, static_cast<double>(i)) * in[i];
  };
  const std::vector<double> b(8, 1.0);
  const CGResult r = conjugate_gradient(diag, b, 1e-14, 2);
  EXPECT_EQ(r.status, CGStatus::MaxIterations);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_GT(r.residual, 1e-14);
}

TEST(SisrDataConsistency, MatchesDenseSolveFactor2) {
  const int n = 12;
  const Kernel k = oracle::random_kernel(3, 27);
  const ImageGray z = oracle::random_image(n, n, 28);
  const ImageGray y = oracle::random_image(n / 2, n / 2, 29);
  const Eigen::MatrixXd a = oracle::dense_subsample(n, n, 2) * oracle::dense_circulant(k, n, n);
  const Eigen::VectorXd ref = oracle::dense_regularized_solve(a, oracle::to_vector(y), oracle::to_vector(z), 0.5);
  const SisrSolve s = sisr_data_consistency(y, k, 2, z, 0.5, {1e-12, 500});
  EXPECT_EQ(s.cg.status, CGStatus::Converged);
  EXPECT_LT(oracle::max_abs_diff(s.x, oracle::to_image(ref, n, n)), 1e-6);
}

TEST(SisrDataConsistency, FactorOneAgreesWithSpectralSolve) {
  const Kernel k = gaussian_kernel(5, 1.0);
  const ImageGray z = oracle::random_image(16, 16, 30);
  const ImageGray y = oracle::random_image(16, 16, 31);
  const SisrSolve s = sisr_data_consistency(y, k, 1, z, 0.3, {1e-10, 300});
  EXPECT_LT(oracle::max_abs_diff(s.x, deblur_data_consistency(y, k, z, 0.3)), 1e-6);
}

TEST(SisrDataConsistency, LargePenaltyReturnsZ) {
  const ImageGray z = oracle::random_image(24, 24, 32);
  const ImageGray y = oracle::random_image(8, 8, 33);
  const SisrSolve s = sisr_data_consistency(y, gaussian_kernel(7, 2.0), 3, z, 1e6);
  EXPECT_LT(oracle::max_abs_diff(s.x, z), 1e-3);
}

TEST(SisrDataConsistency, ShapeErrors) {
  EXPECT_THROW(sisr_data_consistency(ImageGray(5, 5), Kernel::delta(1), 2, ImageGray(12, 12), 1.0), ShapeError);
}

TEST(Fft2d, ConcurrentTransformsAgree) {
  const ImageGray img = oracle::random_image(32, 24, 34);
  const Kernel k = gaussian_kernel(9, 2.0);
  const ImageGray expected = circular_convolve(img, k);
  std::vector<ImageGray> results(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] { results[static_cast<std::size_t>(t)] = circular_convolve(img, k); });
  }
  for (auto& t : threads) t.join();
  for (const ImageGray& r : results) EXPECT_EQ(r, expected);
}
