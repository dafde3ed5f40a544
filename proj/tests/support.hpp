#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dppg/image.hpp"

namespace dppg::test {

inline std::vector<double> tone(double freq, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  return x;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dppg_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Smooth random texture: sum of blurred dots, values in [20, 235].
inline GrayImage textured(int w, int h, std::uint64_t seed, double shift_x = 0.0, double shift_y = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-20.0, w + 20.0), uy(-20.0, h + 20.0), ua(-1.0, 1.0);
  struct Dot {
    double x, y, a;
  };
  std::vector<Dot> dots(static_cast<std::size_t>(w * h / 40));
  for (auto& d : dots) d = {ux(rng), uy(rng), ua(rng)};
  std::vector<double> f(static_cast<std::size_t>(w) * h, 0.0);
  const double s2 = 2.0 * 2.5 * 2.5;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (const auto& d : dots) {
        const double dx = x - shift_x - d.x, dy = y - shift_y - d.y;
        const double r2 = dx * dx + dy * dy;
        if (r2 < 100.0) v += d.a * std::exp(-r2 / s2);
      }
      f[static_cast<std::size_t>(y) * w + x] = v;
    }
  GrayImage img(w, h);
  for (std::size_t i = 0; i < f.size(); ++i)
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(128.0 + 60.0 * f[i]), 20L, 235L));
  return img;
}

}  // namespace dppg::test
