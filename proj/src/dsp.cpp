#include "dppg/dsp.hpp"

#include <fftw3.h>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_interp.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "dppg/image.hpp"

namespace dppg::dsp {

using cd = std::complex<double>;

void BandpassSpec::validate() const {
  if (!(fs > 0.0)) throw InputError("bandpass: fs must be > 0");
  if (!(low > 0.0 && low < high && high < fs / 2.0))
    throw InputError(fmt::format("bandpass: need 0 < low < high < fs/2 (got {}, {}, fs={})", low, high, fs));
  if (order < 1) throw InputError("bandpass: order must be >= 1");
}

SosFilter design_butterworth_bandpass(const BandpassSpec& spec) {
  spec.validate();
  const int n = spec.order;
  const double fs2 = 2.0 * spec.fs;
  const double w1 = fs2 * std::tan(std::numbers::pi * spec.low / spec.fs);
  const double w2 = fs2 * std::tan(std::numbers::pi * spec.high / spec.fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  // Analog bandpass poles; zeros are n at s = 0 and n at infinity.
  std::vector<cd> poles;
  for (int k = 0; k < n; ++k) {
    const cd proto = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n));
    const cd half = proto * bw / 2.0;
    const cd root = std::sqrt(half * half - w0 * w0);
    poles.push_back(half + root);
    poles.push_back(half - root);
  }
  double gain = std::pow(bw, n);

  // Bilinear transform.
  cd num = std::pow(cd(fs2, 0.0), n);  // prod(fs2 - z) over the n zeros at 0
  cd den = 1.0;
  std::vector<cd> zpoles;
  for (const cd& p : poles) {
    den *= (fs2 - p);
    zpoles.push_back((fs2 + p) / (fs2 - p));
  }
  gain *= (num / den).real();

  // Conjugate pairs become denominators; each section takes one zero at +1
  // and one at -1, i.e. b = [1, 0, -1].
  std::vector<cd> upper;
  std::vector<double> real_poles;
  for (const cd& p : zpoles) {
    if (p.imag() > 1e-14)
      upper.push_back(p);
    else if (std::abs(p.imag()) <= 1e-14)
      real_poles.push_back(p.real());
  }
  std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });
  SosFilter f;
  for (const cd& p : upper) f.sections.push_back({1.0, 0.0, -1.0, 1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2)
    f.sections.push_back(
        {1.0, 0.0, -1.0, 1.0, -(real_poles[i] + real_poles[i + 1]), real_poles[i] * real_poles[i + 1]});
  if (f.sections.empty()) throw InputError("bandpass: degenerate design");
  for (int i = 0; i < 3; ++i) f.sections.front()[static_cast<std::size_t>(i)] *= gain;
  return f;
}

std::complex<double> SosFilter::response(double freq_hz, double fs) const {
  const cd z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / fs);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& s : sections) h *= (s[0] + s[1] * z1 + s[2] * z2) / (s[3] + s[4] * z1 + s[5] * z2);
  return h;
}

std::vector<std::array<double, 2>> SosFilter::step_initial_state() const {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sections) {
    const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[4], a2 = s[5];
    // (I - A^T) zi = b[1:] - a[1:] * b0 with A the companion matrix of a.
    const double m00 = 1.0 + a1, m01 = -1.0, m10 = a2, m11 = 1.0;
    const double r0 = b1 - a1 * b0, r1 = b2 - a2 * b0;
    const double det = m00 * m11 - m01 * m10;
    zi.push_back({scale * (r0 * m11 - m01 * r1) / det, scale * (m00 * r1 - m10 * r0) / det});
    scale *= (b0 + b1 + b2) / (1.0 + a1 + a2);
  }
  return zi;
}

std::size_t filtfilt_padlen(const SosFilter& f) { return 3 * (2 * f.sections.size() + 1); }

std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x) {
  const std::size_t pad = filtfilt_padlen(f);
  const std::size_t n = x.size();
  if (n <= pad) throw InputError(fmt::format("filtfilt: input of {} samples is too short (need > {})", n, pad));

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  // zi already carries the cascade's DC scaling; seed with zi * first sample.
  const auto zi = f.step_initial_state();
  auto run = [&](std::vector<double>& v) {
    const double x0 = v.front();
    for (std::size_t k = 0; k < f.sections.size(); ++k) {
      const auto& s = f.sections[k];
      double z0 = zi[k][0] * x0, z1 = zi[k][1] * x0;
      for (double& e : v) {
        const double in = e;
        const double out = s[0] * in + z0;
        z0 = s[1] * in - s[4] * out + z1;
        z1 = s[2] * in - s[5] * out;
        e = out;
      }
    }
  };
  run(ext);
  std::reverse(ext.begin(), ext.end());
  run(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> bandpass_zero_phase(std::span<const double> x, const BandpassSpec& spec) {
  if (x.size() <= static_cast<std::size_t>(6 * 2 * spec.order))
    throw InputError(fmt::format("bandpass: {} samples is too short for order {}", x.size(), spec.order));
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("bandpass: non-finite input sample");
  return filtfilt(design_butterworth_bandpass(spec), x);
}

// ---------------------------------------------------------------------------

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  return w;
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

Psd psd(std::span<const double> x, double fs, Window window) {
  if (x.size() < 64) throw InputError(fmt::format("psd: need >= 64 samples, got {}", x.size()));
  if (!(fs > 0.0)) throw InputError("psd: fs must be > 0");
  for (double v : x)
    if (std::isnan(v)) throw InputError("psd: NaN in input");

  const std::size_t n = x.size();
  const std::size_t nfft = next_pow2(4 * n);
  const std::vector<double> w = window == Window::hamming ? hamming(n) : std::vector<double>(n, 1.0);
  double wsum2 = 0.0;
  for (double v : w) wsum2 += v * v;

  double* in = fftw_alloc_real(nfft);
  fftw_complex* out = fftw_alloc_complex(nfft / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in, out, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i] * w[i];
  std::fill(in + n, in + nfft, 0.0);
  fftw_execute(plan);

  Psd p;
  p.resolution = fs / static_cast<double>(nfft);
  p.freqs.resize(nfft / 2 + 1);
  p.power.resize(nfft / 2 + 1);
  const double scale = 1.0 / (fs * wsum2);
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool edge = (k == 0 || k == nfft / 2);
    p.freqs[k] = static_cast<double>(k) * p.resolution;
    p.power[k] = (edge ? 1.0 : 2.0) * scale * mag2;
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return p;
}

double Psd::band_power(double f_lo, double f_hi) const {
  if (freqs.size() < 2 || !(f_hi > f_lo)) return 0.0;
  auto interp = [&](std::size_t k, double f) {
    const double t = (f - freqs[k]) / (freqs[k + 1] - freqs[k]);
    return power[k] + t * (power[k + 1] - power[k]);
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < freqs.size(); ++k) {
    const double a = std::max(f_lo, freqs[k]);
    const double b = std::min(f_hi, freqs[k + 1]);
    if (b <= a) continue;
    total += 0.5 * (interp(k, a) + interp(k, b)) * (b - a);
  }
  return total;
}

std::size_t Psd::argmax(double f_lo, double f_hi) const {
  std::size_t best = freqs.size();
  double best_power = -1.0;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (freqs[k] < f_lo || freqs[k] > f_hi) continue;
    if (power[k] > best_power) {
      best_power = power[k];
      best = k;
    }
  }
  if (best == freqs.size()) throw InputError("psd: empty frequency band");
  return best;
}

// ---------------------------------------------------------------------------

struct CubicSpline::Impl {
  gsl_interp* interp = nullptr;
};

CubicSpline::CubicSpline(std::span<const double> t, std::span<const double> y)
    : t_(t.begin(), t.end()), y_(y.begin(), y.end()) {
  if (t_.size() != y_.size()) throw InputError("spline: size mismatch");
  if (t_.size() < 4) throw InputError("spline: need >= 4 samples");
  for (std::size_t i = 1; i < t_.size(); ++i)
    if (!(t_[i] > t_[i - 1])) throw InputError("spline: knots must increase");
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;
  impl_ = new Impl;
  impl_->interp = gsl_interp_alloc(gsl_interp_cspline, t_.size());
  if (gsl_interp_init(impl_->interp, t_.data(), y_.data(), t_.size()) != GSL_SUCCESS) {
    gsl_interp_free(impl_->interp);
    delete impl_;
    impl_ = nullptr;
    throw InputError("spline: initialisation failed");
  }
}

CubicSpline::~CubicSpline() {
  if (impl_) {
    gsl_interp_free(impl_->interp);
    delete impl_;
  }
}

CubicSpline::CubicSpline(CubicSpline&& o) noexcept : t_(std::move(o.t_)), y_(std::move(o.y_)), impl_(o.impl_) {
  o.impl_ = nullptr;
}

CubicSpline& CubicSpline::operator=(CubicSpline&& o) noexcept {
  if (this != &o) {
    if (impl_) {
      gsl_interp_free(impl_->interp);
      delete impl_;
    }
    t_ = std::move(o.t_);
    y_ = std::move(o.y_);
    impl_ = o.impl_;
    o.impl_ = nullptr;
  }
  return *this;
}

double CubicSpline::operator()(double t) const {
  t = std::clamp(t, t_.front(), t_.back());
  return gsl_interp_eval(impl_->interp, t_.data(), y_.data(), t, nullptr);
}

std::vector<double> spline_resample(std::span<const double> x, double fs_in, double fs_out) {
  if (x.size() < 4) throw InputError("spline_resample: need >= 4 samples");
  if (!(fs_in > 0.0) || fs_out < fs_in) throw InputError("spline_resample: need fs_out >= fs_in > 0");
  const double span = static_cast<double>(x.size() - 1) / fs_in;
  const auto count = static_cast<std::size_t>(std::floor(span * fs_out + 1e-9)) + 1;
  std::vector<double> times(count);
  for (std::size_t j = 0; j < count; ++j) times[j] = static_cast<double>(j) / fs_out;
  return spline_at(x, fs_in, times);
}

std::vector<double> spline_at(std::span<const double> x, double fs_in, std::span<const double> times) {
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = static_cast<double>(i) / fs_in;
  const CubicSpline s(t, x);
  std::vector<double> out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) out[j] = s(times[j]);
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace dppg::dsp
