#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dppg/geometry.hpp"
#include "dppg/image.hpp"

namespace dppg {

// ---------------------------------------------------------------------------
// Frame sequences: a directory holding manifest.txt plus frame_%06d.pgm files
// (binary P5, maxval 255). Manifest keys: fps, frames, width, height.
// ---------------------------------------------------------------------------

FrameSequence load_sequence(const std::filesystem::path& dir);
void store_sequence(const FrameSequence& seq, const std::filesystem::path& dir);

GrayImage read_pgm(const std::filesystem::path& file);
void write_pgm(const GrayImage& img, const std::filesystem::path& file);
std::string frame_filename(std::size_t index);

// ---------------------------------------------------------------------------
// Region files. One polygon per line, `label: x0,y0 x1,y1 ...`. A line
// `@valid_from_frame N` starts a new set of polygons that replaces the
// previous set from frame N on. '#' starts a comment.
//
// Regions must be the trackable planar set only; areas around eyes and mouth
// deform non-rigidly and should not be listed.
// ---------------------------------------------------------------------------

struct LabeledPolygon {
  std::string label;
  Polygon polygon;
};

struct RegionSet {
  std::size_t valid_from_frame = 0;
  std::vector<LabeledPolygon> regions;
};

struct RegionFile {
  std::vector<RegionSet> sets;  // sorted by valid_from_frame, first starts at 0

  /// Polygons in force at frame t.
  const RegionSet& at_frame(std::size_t t) const;
};

RegionFile parse_region_file(const std::string& text);
RegionFile load_region_file(const std::filesystem::path& file);
std::string format_region_file(const RegionFile& rf);
void store_region_file(const RegionFile& rf, const std::filesystem::path& file);

/// Polygons must be simple and lie inside [0,w]x[0,h]. Throws InputError.
void validate_regions(const RegionFile& rf, int width, int height);

// ---------------------------------------------------------------------------
// Ground truth waveforms: CSV with header `time_s,value`, fixed rate.
// ---------------------------------------------------------------------------

struct GroundTruth {
  double sample_rate = 0.0;
  double start_time = 0.0;
  std::vector<double> samples;
  std::vector<double> beat_times;  // optional, seconds

  double duration() const { return samples.empty() ? 0.0 : (samples.size() - 1) / sample_rate; }
};

GroundTruth load_ground_truth(const std::filesystem::path& file);
void store_ground_truth(const GroundTruth& gt, const std::filesystem::path& file);

/// Parses (time, value) rows; rate from the median step, rejects >1% jitter.
GroundTruth ground_truth_from_rows(const std::vector<double>& times, const std::vector<double>& values);

/// Beat instants, one per row under the header `beat_time_s`.
std::vector<double> load_beat_times(const std::filesystem::path& file);
void store_beat_times(const std::vector<double>& beats, const std::filesystem::path& file);

/// Headered CSV with numeric cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  bool has(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// key=value text, used by the manifest, scene and run-config files.
// ---------------------------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

/// Lines `key=value`; blank lines and '#' comments skipped. Lines without
/// '=' are returned through `other_lines` when provided, else rejected.
KeyValues parse_key_values(const std::string& text, std::vector<std::string>* other_lines = nullptr);
std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

double kv_double(const KeyValues& kv, const std::string& key);
long long kv_int(const KeyValues& kv, const std::string& key);

}  // namespace dppg
