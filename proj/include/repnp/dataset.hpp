#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "repnp/image.hpp"

namespace repnp {

/// PGM files in `dir`, sorted lexicographically by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Loads every image from list_images(dir). Throws DataError when the
/// directory is missing or holds no images.
std::vector<ImageGray> load_dataset(const std::filesystem::path& dir);

/// Deterministic 8-bit piecewise-smooth test scene: shaded background,
/// layered ellipses, polygons and striped regions with anti-aliased edges.
ImageGray synthetic_scene(int height, int width, std::uint64_t seed);

/// `count` scenes with seeds derived from `seed`.
std::vector<ImageGray> synthetic_set(int count, int height, int width, std::uint64_t seed);

}  // namespace repnp
