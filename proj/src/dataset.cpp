#include "repnp/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "repnp/errors.hpp"

namespace repnp {

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::vector<ImageGray> load_dataset(const std::filesystem::path& dir) {
  const auto files = list_images(dir);
  if (files.empty()) throw DataError("dataset directory contains no PGM images: " + dir.string());
  std::vector<ImageGray> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(load_image(f));
  return images;
}

namespace {

struct Shape {
  enum Kind { Ellipse, Polygon, Stripes } kind = Ellipse;
  double cx = 0, cy = 0, rx = 1, ry = 1, angle = 0;
  std::vector<std::array<double, 2>> vertices;
  double base = 128, slope_x = 0, slope_y = 0;
  double stripe_freq = 0, stripe_amp = 0;
};

bool inside_polygon(const std::vector<std::array<double, 2>>& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
  }
  return in;
}

bool covers(const Shape& s, double x, double y) {
  switch (s.kind) {
    case Shape::Polygon:
      return inside_polygon(s.vertices, x, y);
    case Shape::Ellipse:
    case Shape::Stripes: {
      const double c = std::cos(s.angle);
      const double sn = std::sin(s.angle);
      const double u = ((x - s.cx) * c + (y - s.cy) * sn) / s.rx;
      const double v = (-(x - s.cx) * sn + (y - s.cy) * c) / s.ry;
      return u * u + v * v <= 1.0;
    }
  }
  return false;
}

double shade(const Shape& s, double x, double y) {
  double v = s.base + s.slope_x * (x - s.cx) + s.slope_y * (y - s.cy);
  if (s.kind == Shape::Stripes) {
    const double c = std::cos(s.angle);
    const double sn = std::sin(s.angle);
    v += s.stripe_amp * std::sin(s.stripe_freq * (x * c + y * sn));
  }
  return v;
}

}  // namespace

ImageGray synthetic_scene(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double scale = std::min(height, width);

  const double bg_base = uniform(60.0, 190.0);
  const double bg_gx = uniform(-60.0, 60.0) / width;
  const double bg_gy = uniform(-60.0, 60.0) / height;
  const double wave_amp = uniform(0.0, 18.0);
  const double wave_fx = uniform(0.5, 2.5) * 2.0 * std::numbers::pi / width;
  const double wave_fy = uniform(0.5, 2.5) * 2.0 * std::numbers::pi / height;

  const int n_shapes = 6 + static_cast<int>(uniform(0.0, 9.0));
  std::vector<Shape> shapes;
  for (int i = 0; i < n_shapes; ++i) {
    Shape s;
    const double kind = uniform(0.0, 1.0);
    s.kind = kind < 0.45 ? Shape::Ellipse : (kind < 0.85 ? Shape::Polygon : Shape::Stripes);
    s.cx = uniform(0.0, width);
    s.cy = uniform(0.0, height);
    s.rx = uniform(0.05, 0.3) * scale;
    s.ry = uniform(0.05, 0.3) * scale;
    s.angle = uniform(0.0, std::numbers::pi);
    s.base = uniform(10.0, 245.0);
    s.slope_x = uniform(-1.0, 1.0) * 40.0 / scale;
    s.slope_y = uniform(-1.0, 1.0) * 40.0 / scale;
    if (s.kind == Shape::Polygon) {
      const int n_vertices = 3 + static_cast<int>(uniform(0.0, 3.0));
      std::vector<double> angles;
      for (int k = 0; k < n_vertices; ++k) angles.push_back(uniform(0.0, 2.0 * std::numbers::pi));
      std::sort(angles.begin(), angles.end());
      for (double a : angles) {
        const double r = uniform(0.4, 1.0);
        s.vertices.push_back({s.cx + r * s.rx * std::cos(a), s.cy + r * s.ry * std::sin(a)});
      }
    }
    if (s.kind == Shape::Stripes) {
      s.stripe_freq = 2.0 * std::numbers::pi / uniform(4.0, 12.0);
      s.stripe_amp = uniform(10.0, 35.0);
    }
    shapes.push_back(std::move(s));
  }

  // 3x3 supersampling per pixel anti-aliases the shape edges.
  constexpr int kSub = 3;
  ImageGray img(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double x = c + (sx + 0.5) / kSub;
          const double y = r + (sy + 0.5) / kSub;
          double v = bg_base + bg_gx * (x - width / 2.0) + bg_gy * (y - height / 2.0) +
                     wave_amp * std::sin(wave_fx * x) * std::cos(wave_fy * y);
          for (const Shape& s : shapes) {
            if (covers(s, x, y)) v = shade(s, x, y);
          }
          acc += v;
        }
      }
      img(r, c) = std::clamp(std::round(acc / (kSub * kSub)), 0.0, 255.0);
    }
  }
  return img;
}

std::vector<ImageGray> synthetic_set(int count, int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ImageGray> out;
  for (int i = 0; i < count; ++i) out.push_back(synthetic_scene(height, width, rng()));
  return out;
}

}  // namespace repnp
