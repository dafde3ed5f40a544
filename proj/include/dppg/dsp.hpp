#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace dppg::dsp {

struct BandpassSpec {
  double low = 0.5;   // Hz
  double high = 5.0;  // Hz
  int order = 2;      // Butterworth prototype order; each pass has 2*order poles
  double fs = 30.0;   // Hz

  void validate() const;
};

/// Second-order sections [b0, b1, b2, 1, a1, a2].
using Biquad = std::array<double, 6>;

struct SosFilter {
  std::vector<Biquad> sections;

  std::complex<double> response(double freq_hz, double fs) const;
  /// scipy.signal.sosfilt_zi equivalent: steady state for a unit step.
  std::vector<std::array<double, 2>> step_initial_state() const;
};

/// Digital Butterworth bandpass via analog prototype, lowpass-to-bandpass
/// transform and prewarped bilinear transform.
SosFilter design_butterworth_bandpass(const BandpassSpec& spec);

/// Number of samples mirrored at each end before forward-backward filtering.
std::size_t filtfilt_padlen(const SosFilter& f);

/// Runs the filter forward, then backward over an odd-reflected extension
/// of `x`, each pass started from the scaled step steady state. Output has
/// the input's length and zero phase.
std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x);

/// design + filtfilt. Throws InputError when x is too short or non-finite.
std::vector<double> bandpass_zero_phase(std::span<const double> x, const BandpassSpec& spec);

// ---------------------------------------------------------------------------

enum class Window { rectangular, hamming };

/// One-sided power spectral density on a uniform grid from 0 to fs/2.
struct Psd {
  std::vector<double> freqs;
  std::vector<double> power;  // units^2 / Hz
  double resolution = 0.0;    // grid spacing, Hz

  /// Trapezoidal integral of power over [f_lo, f_hi], linearly interpolating
  /// at band edges that fall between grid points.
  double band_power(double f_lo, double f_hi) const;
  /// Grid index of the largest power with freq in [f_lo, f_hi].
  std::size_t argmax(double f_lo, double f_hi) const;
};

/// Single-segment windowed periodogram, zero-padded to the next power of two
/// >= 4 * len. Normalised so that the integral over [0, fs/2] equals the
/// windowed mean square (Parseval).
Psd psd(std::span<const double> x, double fs, Window window = Window::hamming);

std::vector<double> hamming(std::size_t n);

// ---------------------------------------------------------------------------

/// Natural cubic spline through (t_i, y_i).
class CubicSpline {
 public:
  CubicSpline(std::span<const double> t, std::span<const double> y);
  ~CubicSpline();
  CubicSpline(const CubicSpline&) = delete;
  CubicSpline& operator=(const CubicSpline&) = delete;
  CubicSpline(CubicSpline&&) noexcept;
  CubicSpline& operator=(CubicSpline&&) noexcept;

  /// Clamped to the knot span.
  double operator()(double t) const;
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }

 private:
  std::vector<double> t_, y_;
  struct Impl;
  Impl* impl_ = nullptr;
};

/// Samples a natural cubic spline through x (rate fs_in) on the fs_out grid
/// over the same span [0, (n-1)/fs_in].
std::vector<double> spline_resample(std::span<const double> x, double fs_in, double fs_out);

/// Spline through x (rate fs_in, first sample at t=0) evaluated at `times`.
std::vector<double> spline_at(std::span<const double> x, double fs_in, std::span<const double> times);

double mean(std::span<const double> x);
double rms(std::span<const double> x);

}  // namespace dppg::dsp
