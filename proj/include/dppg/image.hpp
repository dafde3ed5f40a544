#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dppg {

/// Thrown for malformed inputs: files, configs, argument ranges. Maps to CLI
/// exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when estimation produced nothing usable. Maps to CLI exit code 1.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major single-channel image.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  T* row(int y) { return pixels.data() + static_cast<std::size_t>(y) * width; }
  const T* row(int y) const { return pixels.data() + static_cast<std::size_t>(y) * width; }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const Image&, const Image&) = default;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

/// Ordered frames with a common size; V(x, y, t) with t the frame index.
struct FrameSequence {
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::vector<GrayImage> frames;

  std::size_t size() const { return frames.size(); }
  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;
};

}  // namespace dppg
