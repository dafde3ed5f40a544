#include "dppg/frameio.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dppg {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw InputError("cannot parse number '" + s + "' in " + what);
  return v;
}

}  // namespace

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

KeyValues parse_key_values(const std::string& text, std::vector<std::string>* other_lines) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const auto colon = body.find(':');
    if (eq == std::string::npos || (colon != std::string::npos && colon < eq)) {
      if (other_lines) {
        other_lines->push_back(body);
        continue;
      }
      throw InputError(fmt::format("line {}: expected key=value, got '{}'", lineno, body));
    }
    kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
  }
  return kv;
}

double kv_double(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InputError("missing key '" + key + "'");
  return parse_double(it->second, key);
}

long long kv_int(const KeyValues& kv, const std::string& key) {
  const double v = kv_double(kv, key);
  if (v != std::floor(v)) throw InputError("key '" + key + "' must be an integer");
  return static_cast<long long>(v);
}

// ---------------------------------------------------------------------------

std::string frame_filename(std::size_t index) { return fmt::format("frame_{:06d}.pgm", index); }

GrayImage read_pgm(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  auto next_token = [&]() {
    std::string tok;
    char ch = 0;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string dummy;
        std::getline(in, dummy);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };
  if (next_token() != "P5") throw InputError(file.string() + ": not a binary P5 PGM");
  const std::string ws = next_token(), hs = next_token(), ms = next_token();
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ws);
    h = std::stoi(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw InputError(file.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0) throw InputError(file.string() + ": bad dimensions");
  if (maxval != 255) throw InputError(file.string() + ": maxval must be 255");
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw InputError(file.string() + ": truncated pixel data");
  return img;
}

void write_pgm(const GrayImage& img, const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

FrameSequence load_sequence(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  if (!fs::exists(manifest)) throw InputError("missing manifest: " + manifest.string());
  const KeyValues kv = parse_key_values(read_text_file(manifest));
  FrameSequence seq;
  seq.fps = kv_double(kv, "fps");
  const auto count = kv_int(kv, "frames");
  seq.width = static_cast<int>(kv_int(kv, "width"));
  seq.height = static_cast<int>(kv_int(kv, "height"));
  if (!(seq.fps > 0.0)) throw InputError("manifest fps must be > 0");
  if (count <= 0 || seq.width <= 0 || seq.height <= 0) throw InputError("manifest sizes must be positive");
  seq.frames.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    GrayImage img = read_pgm(dir / frame_filename(static_cast<std::size_t>(i)));
    if (img.width != seq.width || img.height != seq.height)
      throw InputError(fmt::format("frame {} is {}x{}, manifest says {}x{}", i, img.width, img.height, seq.width,
                                   seq.height));
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

void store_sequence(const FrameSequence& seq, const fs::path& dir) {
  if (seq.frames.empty()) throw InputError("refusing to store an empty frame sequence");
  if (!(seq.fps > 0.0)) throw InputError("fps must be > 0");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto& f = seq.frames[i];
    if (f.width != seq.width || f.height != seq.height)
      throw InputError(fmt::format("frame {} size differs from sequence size", i));
    write_pgm(f, dir / frame_filename(i));
  }
  write_text_file(dir / "manifest.txt", fmt::format("fps={}\nframes={}\nwidth={}\nheight={}\n", seq.fps,
                                                    seq.frames.size(), seq.width, seq.height));
}

// ---------------------------------------------------------------------------

const RegionSet& RegionFile::at_frame(std::size_t t) const {
  if (sets.empty()) throw InputError("region file has no regions");
  const RegionSet* cur = &sets.front();
  for (const auto& s : sets)
    if (s.valid_from_frame <= t) cur = &s;
  return *cur;
}

RegionFile parse_region_file(const std::string& text) {
  RegionFile rf;
  rf.sets.push_back(RegionSet{});
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.rfind("@valid_from_frame", 0) == 0) {
      const std::string arg = trim(body.substr(17));
      const double v = parse_double(arg, fmt::format("region file line {}", lineno));
      if (v < 0 || v != std::floor(v)) throw InputError(fmt::format("line {}: bad frame index", lineno));
      const auto frame = static_cast<std::size_t>(v);
      if (frame == 0 && rf.sets.size() == 1 && rf.sets.front().regions.empty()) continue;
      if (frame <= rf.sets.back().valid_from_frame)
        throw InputError(fmt::format("line {}: valid_from_frame must increase", lineno));
      rf.sets.push_back(RegionSet{frame, {}});
      continue;
    }
    const auto colon = body.find(':');
    if (colon == std::string::npos) throw InputError(fmt::format("line {}: expected 'label: x,y ...'", lineno));
    LabeledPolygon lp;
    lp.label = trim(body.substr(0, colon));
    if (lp.label.empty()) throw InputError(fmt::format("line {}: empty label", lineno));
    std::istringstream pts(body.substr(colon + 1));
    std::string tok;
    while (pts >> tok) {
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw InputError(fmt::format("line {}: vertex '{}' is not x,y", lineno, tok));
      const std::string what = fmt::format("region file line {}", lineno);
      lp.polygon.push_back({parse_double(tok.substr(0, comma), what), parse_double(tok.substr(comma + 1), what)});
    }
    if (lp.polygon.size() < 3) throw InputError(fmt::format("line {}: polygon needs >= 3 vertices", lineno));
    rf.sets.back().regions.push_back(std::move(lp));
  }
  for (const auto& s : rf.sets)
    if (s.regions.empty()) throw InputError("region set starting at frame " + std::to_string(s.valid_from_frame) +
                                            " is empty");
  return rf;
}

RegionFile load_region_file(const fs::path& file) { return parse_region_file(read_text_file(file)); }

std::string format_region_file(const RegionFile& rf) {
  std::string out;
  for (const auto& set : rf.sets) {
    if (set.valid_from_frame != 0) out += fmt::format("@valid_from_frame {}\n", set.valid_from_frame);
    for (const auto& r : set.regions) {
      out += r.label + ":";
      for (const auto& p : r.polygon) out += fmt::format(" {},{}", p.x, p.y);
      out += "\n";
    }
  }
  return out;
}

void store_region_file(const RegionFile& rf, const fs::path& file) { write_text_file(file, format_region_file(rf)); }

void validate_regions(const RegionFile& rf, int width, int height) {
  for (const auto& set : rf.sets)
    for (const auto& r : set.regions) {
      if (!is_simple(r.polygon)) throw InputError("region '" + r.label + "' is not a simple polygon");
      for (const auto& p : r.polygon)
        if (p.x < 0 || p.y < 0 || p.x > width || p.y > height)
          throw InputError("region '" + r.label + "' has a vertex outside the frame");
    }
}

// ---------------------------------------------------------------------------

GroundTruth ground_truth_from_rows(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw InputError("ground truth: column length mismatch");
  if (times.size() < 2) throw InputError("ground truth needs at least 2 samples");
  std::vector<double> steps(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    steps[i - 1] = times[i] - times[i - 1];
    if (!(steps[i - 1] > 0.0)) throw InputError(fmt::format("ground truth: non-monotone timestamp at row {}", i));
  }
  std::vector<double> sorted = steps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (std::size_t i = 0; i < steps.size(); ++i)
    if (std::abs(steps[i] - median) > 0.01 * median)
      throw InputError(fmt::format("ground truth: timestep jitter above 1% at row {}", i + 1));
  for (double v : values)
    if (!std::isfinite(v)) throw InputError("ground truth: non-finite sample");
  GroundTruth gt;
  gt.sample_rate = 1.0 / median;
  gt.start_time = times.front();
  gt.samples = values;
  return gt;
}

GroundTruth load_ground_truth(const fs::path& file) {
  std::istringstream in(read_text_file(file));
  std::string line;
  std::vector<double> t, v;
  bool first = true;
  while (std::getline(in, line)) {
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw InputError("ground truth: expected 'time_s,value' rows");
    if (first) {
      first = false;
      if (!std::isdigit(static_cast<unsigned char>(body[0])) && body[0] != '-' && body[0] != '.') continue;
    }
    const auto comma2 = body.find(',', comma + 1);
    t.push_back(parse_double(trim(body.substr(0, comma)), "ground truth"));
    v.push_back(parse_double(trim(body.substr(comma + 1, comma2 == std::string::npos ? std::string::npos
                                                                                      : comma2 - comma - 1)),
                             "ground truth"));
  }
  return ground_truth_from_rows(t, v);
}

void store_ground_truth(const GroundTruth& gt, const fs::path& file) {
  std::string out = "time_s,value\n";
  out.reserve(gt.samples.size() * 24);
  for (std::size_t i = 0; i < gt.samples.size(); ++i)
    out += fmt::format("{:.6f},{:.9g}\n", gt.start_time + static_cast<double>(i) / gt.sample_rate, gt.samples[i]);
  write_text_file(file, out);
}

std::vector<double> load_beat_times(const fs::path& file) {
  const CsvTable t = read_csv(file);
  return t.column("beat_time_s");
}

void store_beat_times(const std::vector<double>& beats, const fs::path& file) {
  std::string out = "beat_time_s\n";
  for (double b : beats) out += fmt::format("{:.6f}\n", b);
  write_text_file(file, out);
}

bool CsvTable::has(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InputError("csv: missing column '" + name + "'");
  const auto k = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

CsvTable read_csv(const fs::path& file) {
  std::istringstream in(read_text_file(file));
  CsvTable t;
  std::string line;
  auto split = [](const std::string& body) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      cells.push_back(trim(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    auto cells = split(body);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw InputError(fmt::format("{}: row has {} cells, header has {}", file.string(), cells.size(), t.header.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, file.string()));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw InputError(file.string() + ": empty csv");
  return t;
}

}  // namespace dppg
