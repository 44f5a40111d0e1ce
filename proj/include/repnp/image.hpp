#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

namespace repnp {

/// Row-major grayscale image with double-precision intensities. Nominal
/// range is [0, 255]; values outside it are allowed (noisy observations are
/// never clipped), but they must be finite.
class ImageGray {
 public:
  ImageGray() = default;
  ImageGray(int height, int width, double fill = 0.0);
  ImageGray(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int row, int col) { return data_[index(row, col)]; }
  double operator()(int row, int col) const { return data_[index(row, col)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }

  bool same_shape(const ImageGray& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const ImageGray& other) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Throws ShapeError unless both images have identical dimensions.
void require_same_shape(const ImageGray& a, const ImageGray& b, const char* what);

/// Throws NumericalFault if any pixel is NaN or infinite.
void require_finite(const ImageGray& img, const char* what);

/// Pixelwise clamp into [lo, hi].
ImageGray clip(const ImageGray& img, double lo = 0.0, double hi = 255.0);

double mean_squared_error(const ImageGray& reference, const ImageGray& test);

/// Peak signal-to-noise ratio with peak 255. Identical images yield
/// +infinity.
double psnr(const ImageGray& reference, const ImageGray& test);

/// Drops `border` pixels from every side.
ImageGray crop_border(const ImageGray& img, int border);

/// Crop of `height` x `width` starting at (top, left).
ImageGray crop(const ImageGray& img, int top, int left, int height, int width);

/// Largest centered crop whose dimensions are multiples of `factor`.
ImageGray center_crop_to_multiple(const ImageGray& img, int factor);

struct PatchSpec {
  int size = 70;
  std::uint64_t seed = 0;
};

/// Square crop at an offset drawn uniformly over all valid positions.
ImageGray random_patch(const ImageGray& img, const PatchSpec& spec);

/// One of the 8 elements of the dihedral group of the square: index & 3
/// counter-clockwise quarter turns, followed by a horizontal flip when
/// index >= 4. Index 0 is the identity.
ImageGray augment_dihedral(const ImageGray& img, int index);

/// img + i.i.d. N(0, sigma^2) per pixel; no clipping.
ImageGray add_gaussian_noise(const ImageGray& img, double sigma, std::uint64_t seed);

/// Binary PGM (P5, maxval <= 255) reader. Throws DataError on malformed
/// headers or 16-bit rasters.
ImageGray load_image(const std::filesystem::path& path);

/// Writes binary PGM, rounding to the nearest integer and clamping to
/// [0, 255].
void save_image(const ImageGray& img, const std::filesystem::path& path);

}  // namespace repnp
