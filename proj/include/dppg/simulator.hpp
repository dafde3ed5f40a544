#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dppg/frameio.hpp"
#include "dppg/geometry.hpp"
#include "dppg/image.hpp"

namespace dppg::sim {

enum class IlluminationKind { constant, gradient, spotlight };

struct Illumination {
  IlluminationKind kind = IlluminationKind::constant;
  double level = 200.0;          // peak intensity of a white surface
  double gradient_per_px = 0.0;  // gradient: relative change per px along x, centred on the frame
  double spot_x = 160.0, spot_y = 120.0, spot_sigma = 90.0;
  double spot_floor = 0.3;       // spotlight: fraction of `level` far from the centre
  double scale_start = 1.0;      // global scale ramps linearly over the clip
  double scale_end = 1.0;
  double shadow_x = -1.0;        // static shadow for camera x >= shadow_x (disabled when < 0)
  double shadow_factor = 1.0;
  double shadow_softness = 2.0;  // px
};

struct Perfusion {
  double alpha_max = 0.008;
  int cell = 20;                 // lattice cell, px
  double zero_fraction = 0.0;    // share of cells with near-zero perfusion
  double zero_level = 0.02;      // near-zero cells, relative to alpha_max
  double min_level = 0.3;        // other cells draw uniformly from [min_level, 1]
  std::vector<double> region_gain;  // per region index; empty means 1
};

struct Texture {
  double density = 1.0 / 80.0;   // blobs per px^2 over the face
  double amplitude = 0.15;       // reflectance units
  double sigma = 1.8;            // px
};

struct SurfaceNoise {
  double std = 0.0;              // intensity units at illumination `level`; scales with the light
  double max_freq_hz = 0.3;      // all components below this
  int components = 3;
  double node_spacing = 40.0;    // px
};

struct Burst {
  int region = 0;
  double t_start = 0.0, t_end = 0.0;
  double amplitude = 0.0;        // intensity units
  double freq_hz = 1.7;
};

/// Constant per-frame affine step applied while t_start <= t < t_end.
struct MotionSegment {
  double t_start = 0.0, t_end = 0.0;
  Affine step;
};

struct Occluder {
  double t_start = 0.0, t_end = 0.0;
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;  // at t_start, camera px
  double vx = 0.0, vy = 0.0;                  // px per frame
  double intensity = 30.0;
};

struct PpgModel {
  double pr_bpm = 72.0;
  double pr_end_bpm = -1.0;      // linear drift to this rate; < 0 keeps pr_bpm
  double h2 = 0.3, h3 = 0.1;     // harmonic amplitudes relative to the fundamental
  double jitter_ms = 0.0;        // std of the per-beat period
};

struct Face {
  double cx = 160.0, cy = 122.0, rx = 110.0, ry = 120.0;
  double skin_b = 0.5;
  double background_b = 0.25;
  bool features = true;          // eyes, brows, nostrils, mouth
};

struct SceneSpec {
  std::string name = "custom";
  int width = 320, height = 240;
  double fps = 30.0;
  double duration = 40.0;
  std::uint64_t seed = 1;

  Face face;
  Illumination illumination;
  Perfusion perfusion;
  Texture texture;
  SurfaceNoise surface;
  double sensor_noise_std = 0.0;  // additive Gaussian, intensity units
  std::vector<Burst> bursts;
  std::vector<MotionSegment> head_motion;
  std::vector<std::vector<MotionSegment>> region_motion;  // per region, relative to the head
  std::vector<Occluder> occluders;
  PpgModel ppg;
  bool quantize = true;
  std::vector<LabeledPolygon> regions;
  double recommended_epoch_seconds = 10.0;

  std::size_t frame_count() const;
  void validate() const;
};

struct PpgTruth {
  double fs = 0.0;
  std::vector<double> samples;
  std::vector<double> beat_times;
};

/// Harmonic pulse waveform -(cos f + h2 cos 2f + h3 cos 3f) with a phase that
/// advances linearly within each beat; troughs sit on the beat times.
class PulseModel {
 public:
  PulseModel(const PpgModel& m, double duration, std::uint64_t seed);
  double operator()(double t) const;
  const std::vector<double>& beats() const { return beats_; }
  std::vector<double> beats_within(double t0, double t1) const;
  PpgTruth sample(double fs, double duration) const;

 private:
  PpgModel model_;
  std::vector<double> beats_;  // covers [-period, duration + period]
};

struct RoiTruth {
  int roi_id = 0;
  std::string region_label;
  Quad quad;
  double amplitude = 0.0;  // mean of I * alpha over the quad at frame 0
};

struct SceneTruth {
  PpgTruth ppg_fps;
  PpgTruth ppg_500;
  std::vector<RoiTruth> rois;
  std::vector<std::vector<Affine>> cumulative;  // [frame][region], frame 0 -> frame
  RegionFile regions;
};

/// Precomputed static fields plus motion and pulse; renders any frame.
class Scene {
 public:
  explicit Scene(SceneSpec spec);

  const SceneSpec& spec() const { return spec_; }
  const PulseModel& pulse() const { return pulse_; }

  /// Intensity before noise and quantization.
  Image<double> clean_frame(std::size_t t) const;
  /// Adds sensor noise and, when enabled, quantizes with saturation.
  GrayImage frame(std::size_t t) const;
  Image<double> noisy_frame(std::size_t t) const;

  Affine head(std::size_t t) const { return head_[t]; }
  Affine region(std::size_t t, std::size_t r) const;
  double illumination_at(Point2 camera, std::size_t t) const;
  double alpha_at(Point2 source) const;

  SceneTruth truth(int block = 20) const;

 private:
  double field(const std::vector<double>& map, Point2 s) const;

  SceneSpec spec_;
  PulseModel pulse_;
  std::vector<double> alpha_, reflect_;
  std::vector<int> label_;  // source-frame region index, -1 outside
  std::vector<Affine> head_;
  std::vector<std::vector<Affine>> local_;  // [region][frame]
  struct Node {
    double amp[4], freq[4], phase[4];
  };
  std::vector<Node> nodes_;
  int nodes_x_ = 0, nodes_y_ = 0;
};

struct Rendered {
  FrameSequence frames;
  SceneTruth truth;
};

/// Renders every frame (OpenMP over frames) and the truth.
Rendered render(const SceneSpec& spec);

std::vector<std::string> preset_names();
SceneSpec preset(const std::string& name, std::uint64_t seed = 0);  // seed 0 keeps the preset's own
std::vector<SceneSpec> preset_scenes();

/// Scene file: key=value overrides on top of `base=<preset>` plus region lines.
SceneSpec parse_scene(const std::string& text);

/// Writes frames/, regions.txt, truth.csv (500 Hz), beats.csv,
/// roi_truth.csv, affines.csv and scene.txt under `dir`.
void write_artifacts(const Rendered& r, const SceneSpec& spec, const std::filesystem::path& dir);

}  // namespace dppg::sim
