#include "repnp/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "repnp/errors.hpp"

namespace repnp {

ImageGray::ImageGray(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw ShapeError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

ImageGray::ImageGray(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) {
    throw ShapeError("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ShapeError("pixel buffer size does not match image dimensions");
  }
}

void require_same_shape(const ImageGray& a, const ImageGray& b, const char* what) {
  if (!a.same_shape(b)) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch " << a.height() << "x" << a.width() << " vs "
        << b.height() << "x" << b.width();
    throw ShapeError(msg.str());
  }
}

void require_finite(const ImageGray& img, const char* what) {
  for (double v : img.pixels()) {
    if (!std::isfinite(v)) {
      throw NumericalFault(std::string(what) + ": non-finite pixel value");
    }
  }
}

ImageGray clip(const ImageGray& img, double lo, double hi) {
  ImageGray out = img;
  for (double& v : out.pixels()) v = std::clamp(v, lo, hi);
  return out;
}

double mean_squared_error(const ImageGray& reference, const ImageGray& test) {
  require_same_shape(reference, test, "mean_squared_error");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - test[i];
    acc += d * d;
  }
  return acc / static_cast<double>(reference.size());
}

double psnr(const ImageGray& reference, const ImageGray& test) {
  const double mse = mean_squared_error(reference, test);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

ImageGray crop(const ImageGray& img, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > img.height() ||
      left + width > img.width()) {
    throw ShapeError("crop window outside image");
  }
  ImageGray out(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) out(r, c) = img(top + r, left + c);
  }
  return out;
}

ImageGray crop_border(const ImageGray& img, int border) {
  if (border == 0) return img;
  return crop(img, border, border, img.height() - 2 * border, img.width() - 2 * border);
}

ImageGray center_crop_to_multiple(const ImageGray& img, int factor) {
  if (factor < 1) throw ConfigError("crop factor must be positive");
  const int h = img.height() / factor * factor;
  const int w = img.width() / factor * factor;
  if (h == 0 || w == 0) throw ShapeError("image smaller than crop factor");
  return crop(img, (img.height() - h) / 2, (img.width() - w) / 2, h, w);
}

ImageGray random_patch(const ImageGray& img, const PatchSpec& spec) {
  if (spec.size < 1 || spec.size > img.height() || spec.size > img.width()) {
    throw ShapeError("patch size " + std::to_string(spec.size) + " does not fit in " +
                     std::to_string(img.height()) + "x" + std::to_string(img.width()) + " image");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> row(0, img.height() - spec.size);
  std::uniform_int_distribution<int> col(0, img.width() - spec.size);
  const int top = row(rng);
  const int left = col(rng);
  return crop(img, top, left, spec.size, spec.size);
}

namespace {

ImageGray rotate_ccw(const ImageGray& img) {
  const int h = img.height();
  const int w = img.width();
  ImageGray out(w, h);
  for (int r = 0; r < w; ++r) {
    for (int c = 0; c < h; ++c) out(r, c) = img(c, w - 1 - r);
  }
  return out;
}

ImageGray flip_horizontal(const ImageGray& img) {
  ImageGray out(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) out(r, c) = img(r, img.width() - 1 - c);
  }
  return out;
}

}  // namespace

ImageGray augment_dihedral(const ImageGray& img, int index) {
  if (index < 0 || index > 7) {
    throw ConfigError("dihedral index must be in [0, 7], got " + std::to_string(index));
  }
  ImageGray out = img;
  for (int i = 0; i < (index & 3); ++i) out = rotate_ccw(out);
  if (index >= 4) out = flip_horizontal(out);
  return out;
}

ImageGray add_gaussian_noise(const ImageGray& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("noise sigma must be finite and non-negative");
  }
  if (sigma == 0.0) return img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  ImageGray out = img;
  for (double& v : out.pixels()) v += noise(rng);
  return out;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(ch);
  }
  return token;
}

int parse_header_int(std::istream& in, const std::filesystem::path& path, const char* field) {
  const std::string token = next_token(in);
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PGM header field '" + field + "'");
  }
}

}  // namespace

ImageGray load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5") {
    throw DataError(path.string() + ": unsupported format '" + magic + "' (expected binary PGM P5)");
  }
  const int width = parse_header_int(in, path, "width");
  const int height = parse_header_int(in, path, "height");
  const int maxval = parse_header_int(in, path, "maxval");
  if (width < 1 || height < 1) throw DataError(path.string() + ": non-positive dimensions");
  if (maxval > 255) {
    throw DataError(path.string() + ": unsupported bit depth (maxval " + std::to_string(maxval) +
                    ", only 8-bit supported)");
  }
  if (maxval < 1) throw DataError(path.string() + ": invalid maxval");
  // next_token consumed exactly one whitespace byte after maxval.
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw DataError(path.string() + ": truncated pixel data");
  }
  std::vector<double> data(raw.begin(), raw.end());
  return ImageGray(height, width, std::move(data));
}

void save_image(const ImageGray& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::clamp(std::lround(img[i]), 0L, 255L));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("failed writing image " + path.string());
}

}  // namespace repnp
