#include "dppg/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>

#include "dppg/evaluate.hpp"
#include "dppg/simulator.hpp"

namespace dppg::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kConfigKeys = {
    "epoch_seconds", "ransac_seed",  "max_features", "klt_window",         "klt_pyramid_levels",
    "klt_max_iterations", "klt_epsilon", "fb_error_px", "min_features", "ransac_eps_px",
    "ransac_inlier_frac", "ransac_iters", "a_th",    "goodness_floor",     "pr_band_halfwidth_hz",
    "pr_jump_bpm",   "goodness_cap", "band_low_hz",  "band_high_hz",       "filter_order",
    "block",         "estimator"};

std::string fmt_opt(std::optional<double> v) { return v ? fmt::format("{:.6g}", *v) : "nan"; }

}  // namespace

std::string apply_config(const KeyValues& kv, pipeline::EstimateConfig& cfg) {
  std::string estimator;
  for (const auto& [key, value] : kv) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
      throw InputError("unknown config key '" + key + "'");
    (void)value;
  }
  auto num = [&](const char* key, double& dst) {
    if (kv.count(key)) dst = kv_double(kv, key);
  };
  auto integer = [&](const char* key, auto& dst) {
    if (kv.count(key)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(kv_int(kv, key));
  };
  auto& tr = cfg.tracking;
  num("epoch_seconds", tr.epoch_seconds);
  integer("ransac_seed", tr.ransac_seed);
  integer("max_features", tr.max_features);
  integer("klt_window", tr.klt_window);
  integer("klt_pyramid_levels", tr.klt_pyramid_levels);
  integer("klt_max_iterations", tr.klt_max_iterations);
  num("klt_epsilon", tr.klt_epsilon);
  num("fb_error_px", tr.fb_error_px);
  integer("min_features", tr.min_features);
  num("ransac_eps_px", tr.ransac_eps_px);
  num("ransac_inlier_frac", tr.ransac_inlier_frac);
  integer("ransac_iters", tr.ransac_iters);
  num("a_th", cfg.mrc.a_th);
  num("goodness_floor", cfg.mrc.goodness_floor);
  num("pr_band_halfwidth_hz", cfg.mrc.pr_band_halfwidth_hz);
  num("pr_jump_bpm", cfg.mrc.pr_jump_bpm);
  num("goodness_cap", cfg.mrc.goodness_cap);
  num("band_low_hz", cfg.bandpass.low);
  num("band_high_hz", cfg.bandpass.high);
  integer("filter_order", cfg.bandpass.order);
  integer("block", cfg.block);
  cfg.mrc.band_low_hz = cfg.bandpass.low;
  cfg.mrc.band_high_hz = cfg.bandpass.high;
  if (kv.count("estimator")) estimator = kv.at("estimator");

  if (!(tr.epoch_seconds > 0.0)) throw InputError("epoch_seconds must be positive");
  if (tr.klt_window < 3 || tr.klt_window % 2 == 0) throw InputError("klt_window must be odd and >= 3");
  if (tr.klt_pyramid_levels < 1) throw InputError("klt_pyramid_levels must be >= 1");
  if (tr.ransac_iters < 1 || tr.min_features < 3) throw InputError("ransac_iters >= 1 and min_features >= 3 required");
  if (cfg.block < 4) throw InputError("block must be >= 4");
  return estimator;
}

void write_estimate(const pipeline::EstimateResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::string ppg = "time_s,value,epoch,valid\n";
  for (std::size_t t = 0; t < r.ppg.size(); ++t)
    ppg += fmt::format("{:.6f},{:.9g},{},{}\n", static_cast<double>(t) / r.fps, r.ppg[t], r.epoch[t], r.valid[t] ? 1 : 0);
  write_text_file(dir / "ppg.csv", ppg);

  std::string w = "epoch,roi_id,region_index,goodness,weight,amp_range,gate\n";
  std::string traces = "epoch,frame,roi_id,value\n";
  std::string regions = "epoch,region_index,status,reason,rejected_at,live_features,a,b,tx,c,d,ty\n";
  std::string epochs =
      "epoch,start_frame,end_frame,coarse_pr_bpm,has_estimate,contributing,rois,gated_amplitude,gated_floor,"
      "gated_tracking,weights_fallback,shift_x,shift_y\n";
  for (const auto& ep : r.epochs) {
    std::size_t gated[4] = {0, 0, 0, 0};
    for (const auto& roi : ep.rois) {
      ++gated[static_cast<int>(roi.gate)];
      w += fmt::format("{},{},{},{:.9g},{:.9g},{:.9g},{}\n", ep.epoch_index, roi.roi_id, roi.region_index, roi.goodness,
                       roi.weight, roi.amp_range, static_cast<int>(roi.gate));
      for (std::size_t k = 0; k < roi.filtered.size(); ++k)
        traces += fmt::format("{},{},{},{:.9g}\n", ep.epoch_index, ep.start_frame + k, roi.roi_id, roi.filtered[k]);
    }
    for (std::size_t i = 0; i < ep.regions.size(); ++i) {
      const auto& g = ep.regions[i];
      regions += fmt::format("{},{},{},{},{},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", ep.epoch_index, i,
                             static_cast<int>(g.status), static_cast<int>(g.reason), g.rejected_at, g.live_features,
                             g.cumulative.a, g.cumulative.b, g.cumulative.tx, g.cumulative.c, g.cumulative.d,
                             g.cumulative.ty);
    }
    epochs += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", ep.epoch_index, ep.start_frame, ep.end_frame,
                          fmt_opt(ep.coarse_pr_bpm), ep.has_estimate ? 1 : 0, ep.contributing, ep.rois.size(),
                          gated[1], gated[2], gated[3], ep.weights_fallback ? 1 : 0, ep.shift_x, ep.shift_y);
  }
  write_text_file(dir / "weights.csv", w);
  write_text_file(dir / "roi_traces.csv", traces);
  write_text_file(dir / "regions.csv", regions);
  write_text_file(dir / "epochs.csv", epochs);
}

namespace {

struct ScenePaths {
  fs::path frames, regions, truth, beats, roi_truth;
  std::optional<double> epoch_seconds;
};

ScenePaths scene_paths(const fs::path& dir) {
  ScenePaths p{dir / "frames", dir / "regions.txt", dir / "truth.csv", dir / "beats.csv", dir / "roi_truth.csv", {}};
  if (fs::exists(dir / "scene.txt")) {
    const KeyValues kv = parse_key_values(read_text_file(dir / "scene.txt"));
    if (kv.count("epoch_seconds")) p.epoch_seconds = kv_double(kv, "epoch_seconds");
  }
  return p;
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty() || !fs::exists(p)) throw InputError(fmt::format("{} not found: {}", what, p.string()));
}

eval::Series load_series(const fs::path& file) {
  const CsvTable t = read_csv(file);
  eval::Series s;
  const auto time = t.column("time_s");
  s.values = t.column("value");
  if (time.size() < 2) throw InputError("ppg csv needs at least 2 rows");
  s.fs = static_cast<double>(time.size() - 1) / (time.back() - time.front());
  for (double e : t.column("epoch")) s.epoch.push_back(static_cast<std::size_t>(e));
  if (t.has("valid")) {
    for (double v : t.column("valid")) s.valid.push_back(v != 0.0);
  } else {
    s.valid.assign(s.values.size(), true);
  }
  return s;
}

/// Rebuilds the per-ROI part of the epoch reports from weights.csv and
/// roi_traces.csv.
std::vector<pipeline::EpochReport> load_roi_reports(const fs::path& weights, const fs::path& traces,
                                                    const eval::Series& s) {
  std::map<std::size_t, pipeline::EpochReport> eps;
  for (std::size_t t = 0; t < s.epoch.size(); ++t) {
    auto& ep = eps[s.epoch[t]];
    if (ep.end_frame == 0) ep.start_frame = t;
    ep.epoch_index = s.epoch[t];
    ep.end_frame = t + 1;
  }
  const CsvTable w = read_csv(weights);
  std::map<std::pair<std::size_t, int>, std::size_t> index;
  const auto we = w.column("epoch"), wid = w.column("roi_id"), wr = w.column("region_index"), wg = w.column("goodness"),
             ww = w.column("weight"), wa = w.column("amp_range"), wgate = w.column("gate");
  for (std::size_t i = 0; i < we.size(); ++i) {
    auto& ep = eps[static_cast<std::size_t>(we[i])];
    pipeline::RoiRecord r;
    r.roi_id = static_cast<int>(wid[i]);
    r.region_index = static_cast<int>(wr[i]);
    r.goodness = wg[i];
    r.weight = ww[i];
    r.amp_range = wa[i];
    r.gate = static_cast<mrc::GateReason>(static_cast<int>(wgate[i]));
    index[{static_cast<std::size_t>(we[i]), r.roi_id}] = ep.rois.size();
    ep.rois.push_back(std::move(r));
  }
  const CsvTable tr = read_csv(traces);
  const auto te = tr.column("epoch"), tid = tr.column("roi_id"), tv = tr.column("value");
  for (std::size_t i = 0; i < te.size(); ++i) {
    const auto key = std::make_pair(static_cast<std::size_t>(te[i]), static_cast<int>(tid[i]));
    const auto it = index.find(key);
    if (it == index.end()) throw InputError("roi_traces.csv references an ROI missing from weights.csv");
    eps[key.first].rois[it->second].filtered.push_back(tv[i]);
  }
  std::vector<pipeline::EpochReport> out;
  for (auto& [k, ep] : eps) out.push_back(std::move(ep));
  return out;
}

std::map<int, double> load_amplitudes(const fs::path& file) {
  const CsvTable t = read_csv(file);
  std::map<int, double> out;
  const auto id = t.column("roi_id"), a = t.column("amplitude");
  for (std::size_t i = 0; i < id.size(); ++i) out[static_cast<int>(id[i])] = a[i];
  return out;
}

struct EvalOutputs {
  eval::Evaluation ev;
  std::vector<eval::GoodnessPoint> points;
  std::optional<double> spearman;
  double pr_mae = 0.0, pr_within_1 = 0.0, pr_over_5 = 0.0;
};

EvalOutputs run_evaluation(const eval::Series& s, const fs::path& truth_file, const fs::path& beats_file,
                           const std::vector<pipeline::EpochReport>* reports, const fs::path& roi_truth,
                           const pipeline::EstimateConfig& cfg) {
  const GroundTruth truth = load_ground_truth(truth_file);
  const std::vector<double> beats = beats_file.empty() || !fs::exists(beats_file) ? std::vector<double>{}
                                                                                  : load_beat_times(beats_file);
  eval::EvalOptions opt;
  opt.band = cfg.bandpass;
  opt.band.fs = s.fs;
  EvalOutputs out;
  out.ev = eval::evaluate(s, truth, beats, opt);
  const auto& pe = out.ev.pr_est.pr;
  const auto& pr = out.ev.pr_ref.pr;
  for (std::size_t i = 0; i < pe.size(); ++i) {
    const double err = std::abs(pe[i] - pr[i]);
    out.pr_mae += err;
    out.pr_within_1 += err <= 1.0 ? 1.0 : 0.0;
    out.pr_over_5 += err > 5.0 ? 1.0 : 0.0;
  }
  if (!pe.empty()) {
    out.pr_mae /= static_cast<double>(pe.size());
    out.pr_within_1 *= 100.0 / static_cast<double>(pe.size());
    out.pr_over_5 *= 100.0 / static_cast<double>(pe.size());
  }
  if (reports && !roi_truth.empty() && fs::exists(roi_truth)) {
    std::vector<double> times(s.values.size());
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i) / s.fs - truth.start_time;
    const std::vector<double> truth_fps = dsp::spline_at(truth.samples, truth.sample_rate, times);
    out.points = eval::goodness_vs_snr(*reports, load_amplitudes(roi_truth), truth_fps, opt.band);
    std::vector<double> g, snr;
    for (const auto& p : out.points)
      if (p.goodness_db > -3.0) {
        g.push_back(p.goodness_db);
        snr.push_back(p.true_snr_db);
      }
    if (g.size() >= 2) out.spearman = vitals::spearman(g, snr);
  }
  return out;
}

void write_evaluation(const EvalOutputs& o, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& ev = o.ev;
  std::string snr = "epoch,start_s,end_s,valid,snr_db,scale_ratio,lag_samples\n";
  for (const auto& e : ev.snr)
    snr += fmt::format("{},{:.6f},{:.6f},{},{:.6f},{:.9g},{}\n", e.epoch, e.start_s, e.end_s, e.valid ? 1 : 0,
                       e.valid ? e.snr.snr_db : std::nan(""), e.valid ? e.snr.scale_ratio : std::nan(""),
                       e.snr.lag_samples);
  write_text_file(dir / "snr.csv", snr);

  std::string pr = "center_s,pr_est_bpm,pr_ref_bpm,error_bpm,has_peak\n";
  for (std::size_t i = 0; i < ev.pr_est.pr.size(); ++i)
    pr += fmt::format("{:.3f},{:.6f},{:.6f},{:.6f},{}\n", ev.pr_est.centers[i], ev.pr_est.pr[i], ev.pr_ref.pr[i],
                      ev.pr_est.pr[i] - ev.pr_ref.pr[i], ev.pr_est.has_peak[i] ? 1 : 0);
  write_text_file(dir / "pr_series.csv", pr);

  std::string ibi = "ref_index,ref_time_s,est_time_s,ref_ibi_ms,est_ibi_ms,error_ms\n";
  const auto& m = ev.match;
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    const auto [ri, ei] = m.pairs[k];
    const double rt = ev.beats_ref.beat_times[ri], et = ev.beats_est.beat_times[ei];
    double r_ibi = std::nan(""), e_ibi = std::nan("");
    if (k + 1 < m.pairs.size() && m.pairs[k + 1].first == ri + 1) {
      r_ibi = 1000.0 * (ev.beats_ref.beat_times[ri + 1] - rt);
      e_ibi = 1000.0 * (ev.beats_est.beat_times[m.pairs[k + 1].second] - et);
    }
    ibi += fmt::format("{},{:.6f},{:.6f},{:.3f},{:.3f},{:.3f}\n", ri, rt, et, r_ibi, e_ibi, e_ibi - r_ibi);
  }
  write_text_file(dir / "ibi.csv", ibi);

  std::string ag = "subset,n,mean_bias_bpm,sd_bpm,loa_low_bpm,loa_high_bpm,outliers\n";
  if (ev.agreement) {
    const auto row = [&](const char* name, const vitals::AgreementStats& s) {
      ag += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", name, s.n, s.mean_bias, s.sd, s.loa_low, s.loa_high,
                        ev.agreement->outliers);
    };
    row("all", ev.agreement->all);
    if (ev.agreement->filtered) row("filtered", *ev.agreement->filtered);
  }
  write_text_file(dir / "agreement.csv", ag);

  if (!o.points.empty()) {
    std::string gs = "epoch,roi_id,goodness,goodness_db,true_snr_db\n";
    for (const auto& p : o.points)
      gs += fmt::format("{},{},{:.9g},{:.6f},{:.6f}\n", p.epoch, p.roi_id, p.goodness, p.goodness_db, p.true_snr_db);
    write_text_file(dir / "goodness_snr.csv", gs);
  }

  std::string sum = "metric,value\n";
  sum += fmt::format("mean_snr_db,{:.6f}\n", ev.mean_snr_db);
  sum += fmt::format("pr_mae_bpm,{:.6f}\n", o.pr_mae);
  sum += fmt::format("pr_within_1bpm_pct,{:.3f}\n", o.pr_within_1);
  sum += fmt::format("pr_over_5bpm_pct,{:.3f}\n", o.pr_over_5);
  sum += fmt::format("ibi_rmse_ms,{:.6f}\n", m.rmse_ms);
  sum += fmt::format("missing_pct,{:.6f}\n", m.missing_pct);
  sum += fmt::format("beats_ref,{}\n", ev.beats_ref.beat_times.size());
  sum += fmt::format("beats_est,{}\n", ev.beats_est.beat_times.size());
  if (o.spearman) sum += fmt::format("goodness_snr_spearman,{:.6f}\n", *o.spearman);
  write_text_file(dir / "summary.csv", sum);
}

double gated_pct(const pipeline::EstimateResult& r) {
  std::size_t total = 0, gated = 0;
  for (const auto& ep : r.epochs)
    for (const auto& roi : ep.rois) {
      ++total;
      gated += roi.weight > 0.0 ? 0 : 1;
    }
  return total ? 100.0 * static_cast<double>(gated) / static_cast<double>(total) : 0.0;
}

struct CommonEstimateArgs {
  std::string frames, regions, scene_dir, config, estimator;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> flags;
};

void add_config_flags(CLI::App* app, CommonEstimateArgs& a) {
  app->add_option("--config", a.config, "key=value run-config file");
  app->add_option("--seed", a.seed, "RANSAC seed");
  for (const auto& key : kConfigKeys) {
    if (key == "estimator") continue;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app->add_option_function<std::string>(flag, [&a, key](const std::string& v) { a.flags[key] = v; },
                                          "config key " + key);
  }
}

pipeline::EstimateConfig build_config(const CommonEstimateArgs& a, std::optional<double> scene_epoch,
                                      std::string* estimator) {
  pipeline::EstimateConfig cfg;
  KeyValues kv;
  if (!a.config.empty()) {
    require_file(a.config, "config file");
    kv = parse_key_values(read_text_file(a.config));
  }
  if (scene_epoch && !kv.count("epoch_seconds")) kv["epoch_seconds"] = fmt::format("{}", *scene_epoch);
  for (const auto& [k, v] : a.flags) kv[k] = v;
  if (a.seed) kv["ransac_seed"] = std::to_string(*a.seed);
  std::string est = apply_config(kv, cfg);
  if (estimator) {
    if (!a.estimator.empty()) est = a.estimator;
    *estimator = est.empty() ? "distanceppg" : est;
    if (*estimator != "distanceppg" && *estimator != "face_average")
      throw InputError("unknown estimator '" + *estimator + "'");
  }
  return cfg;
}

pipeline::EstimateResult run_estimator(const std::string& name, const FrameSequence& seq, const RegionFile& rf,
                                       const pipeline::EstimateConfig& cfg) {
  return name == "face_average" ? pipeline::estimate_face_average(seq, rf, cfg)
                                : pipeline::estimate_distanceppg(seq, rf, cfg);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"distancePPG: camera-based pulse estimation with goodness-weighted ROI combining"};
  app.require_subcommand(1);

  std::string sim_scene, sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<double> sim_duration;
  auto* sim = app.add_subcommand("simulate", "render a preset or scene file with ground truth");
  sim->add_option("scene", sim_scene, "preset name or scene file")->required();
  sim->add_option("out", sim_out, "output directory")->required();
  sim->add_option("--seed", sim_seed, "scene seed");
  sim->add_option("--duration", sim_duration, "clip length in seconds");

  CommonEstimateArgs est_args;
  std::string est_out;
  auto* est = app.add_subcommand("estimate", "estimate the pulse waveform from frames and regions");
  est->add_option("--frames", est_args.frames, "frame directory");
  est->add_option("--regions", est_args.regions, "region file");
  est->add_option("--scene-dir", est_args.scene_dir, "simulate output directory (frames/, regions.txt)");
  est->add_option("--estimator", est_args.estimator, "distanceppg or face_average");
  est->add_option("--out", est_out, "output directory")->required();
  add_config_flags(est, est_args);

  std::string ev_ppg, ev_truth, ev_beats, ev_weights, ev_traces, ev_roi_truth, ev_out, ev_config;
  auto* evc = app.add_subcommand("evaluate", "score an estimate against ground truth");
  evc->add_option("--ppg", ev_ppg, "ppg.csv from estimate")->required();
  evc->add_option("--truth", ev_truth, "ground-truth csv (time_s,value)")->required();
  evc->add_option("--beats", ev_beats, "reference beat times csv");
  evc->add_option("--weights", ev_weights, "weights.csv from estimate");
  evc->add_option("--roi-traces", ev_traces, "roi_traces.csv from estimate");
  evc->add_option("--roi-truth", ev_roi_truth, "roi_truth.csv from simulate");
  evc->add_option("--config", ev_config, "run-config file (band keys)");
  evc->add_option("--out", ev_out, "output directory")->required();

  CommonEstimateArgs cmp_args;
  std::string cmp_truth, cmp_beats, cmp_roi_truth, cmp_out;
  auto* cmp = app.add_subcommand("compare", "run both estimators and tabulate SNR, PR and PRV");
  cmp->add_option("--frames", cmp_args.frames, "frame directory");
  cmp->add_option("--regions", cmp_args.regions, "region file");
  cmp->add_option("--truth", cmp_truth, "ground-truth csv");
  cmp->add_option("--beats", cmp_beats, "reference beat times csv");
  cmp->add_option("--roi-truth", cmp_roi_truth, "roi_truth.csv");
  cmp->add_option("--scene-dir", cmp_args.scene_dir, "simulate output directory");
  cmp->add_option("--out", cmp_out, "output directory")->required();
  add_config_flags(cmp, cmp_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) {
      sim::SceneSpec spec;
      const auto names = sim::preset_names();
      if (std::find(names.begin(), names.end(), sim_scene) != names.end()) {
        spec = sim::preset(sim_scene, sim_seed.value_or(0));
      } else if (fs::is_regular_file(sim_scene)) {
        spec = sim::parse_scene(read_text_file(sim_scene));
        if (sim_seed) spec.seed = *sim_seed;
      } else {
        throw InputError("unknown scene '" + sim_scene + "' (presets: " + fmt::format("{}", fmt::join(names, ", ")) + ")");
      }
      if (sim_duration) spec.duration = *sim_duration;
      const sim::Rendered r = sim::render(spec);
      sim::write_artifacts(r, spec, sim_out);
      std::cout << fmt::format("simulate: {} frames of '{}' (seed {}) written to {}\n", r.frames.size(), spec.name,
                               spec.seed, sim_out);
      return kOk;
    }

    if (*est) {
      std::optional<double> scene_epoch;
      if (!est_args.scene_dir.empty()) {
        const ScenePaths p = scene_paths(est_args.scene_dir);
        if (est_args.frames.empty()) est_args.frames = p.frames.string();
        if (est_args.regions.empty()) est_args.regions = p.regions.string();
        scene_epoch = p.epoch_seconds;
      }
      require_file(est_args.frames, "frames directory");
      require_file(est_args.regions, "region file");
      std::string estimator;
      const pipeline::EstimateConfig cfg = build_config(est_args, scene_epoch, &estimator);
      const FrameSequence seq = load_sequence(est_args.frames);
      const RegionFile rf = load_region_file(est_args.regions);
      validate_regions(rf, seq.width, seq.height);
      const pipeline::EstimateResult r = run_estimator(estimator, seq, rf, cfg);
      write_estimate(r, est_out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << fmt::format("estimate: {} over {} frames, {} epochs -> {}\n", estimator, r.ppg.size(),
                               r.epochs.size(), est_out);
      return kOk;
    }

    if (*evc) {
      require_file(ev_ppg, "ppg csv");
      require_file(ev_truth, "truth csv");
      CommonEstimateArgs a;
      a.config = ev_config;
      const pipeline::EstimateConfig cfg = build_config(a, std::nullopt, nullptr);
      const eval::Series s = load_series(ev_ppg);
      std::optional<std::vector<pipeline::EpochReport>> reports;
      if (!ev_weights.empty() && !ev_traces.empty()) {
        require_file(ev_weights, "weights csv");
        require_file(ev_traces, "roi traces csv");
        reports = load_roi_reports(ev_weights, ev_traces, s);
      }
      const EvalOutputs o =
          run_evaluation(s, ev_truth, ev_beats, reports ? &*reports : nullptr, ev_roi_truth, cfg);
      write_evaluation(o, ev_out);
      std::cout << fmt::format("evaluate: mean SNR {:.2f} dB, PR MAE {:.2f} bpm, IBI RMSE {:.1f} ms, missing {:.1f}%\n",
                               o.ev.mean_snr_db, o.pr_mae, o.ev.match.rmse_ms, o.ev.match.missing_pct);
      return kOk;
    }

    if (*cmp) {
      std::optional<double> scene_epoch;
      if (!cmp_args.scene_dir.empty()) {
        const ScenePaths p = scene_paths(cmp_args.scene_dir);
        if (cmp_args.frames.empty()) cmp_args.frames = p.frames.string();
        if (cmp_args.regions.empty()) cmp_args.regions = p.regions.string();
        if (cmp_truth.empty()) cmp_truth = p.truth.string();
        if (cmp_beats.empty() && fs::exists(p.beats)) cmp_beats = p.beats.string();
        if (cmp_roi_truth.empty() && fs::exists(p.roi_truth)) cmp_roi_truth = p.roi_truth.string();
        scene_epoch = p.epoch_seconds;
      }
      require_file(cmp_args.frames, "frames directory");
      require_file(cmp_args.regions, "region file");
      require_file(cmp_truth, "truth csv");
      const pipeline::EstimateConfig cfg = build_config(cmp_args, scene_epoch, nullptr);
      const FrameSequence seq = load_sequence(cmp_args.frames);
      const RegionFile rf = load_region_file(cmp_args.regions);
      validate_regions(rf, seq.width, seq.height);

      const fs::path out(cmp_out);
      std::string table =
          "estimator,mean_snr_db,delta_snr_db,pr_mae_bpm,pr_within_1bpm_pct,pr_over_5bpm_pct,bias_bpm,loa_low_bpm,"
          "loa_high_bpm,ibi_rmse_ms,missing_pct,gated_roi_pct\n";
      std::vector<pipeline::EstimateResult> results;
      std::vector<EvalOutputs> evals;
      for (const char* name : {"distanceppg", "face_average"}) {
        results.push_back(run_estimator(name, seq, rf, cfg));
        write_estimate(results.back(), out / name);
        const eval::Series s = eval::from_result(results.back());
        evals.push_back(run_evaluation(s, cmp_truth, cmp_beats,
                                       std::string(name) == "distanceppg" ? &results.back().epochs : nullptr,
                                       cmp_roi_truth, cfg));
        write_evaluation(evals.back(), out / name);
      }
      const double base = evals[1].ev.mean_snr_db;
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& o = evals[i];
        const auto& ag = o.ev.agreement;
        table += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.3f},{:.3f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n",
                             results[i].estimator, o.ev.mean_snr_db, o.ev.mean_snr_db - base, o.pr_mae,
                             o.pr_within_1, o.pr_over_5, ag ? ag->all.mean_bias : std::nan(""),
                             ag ? ag->all.loa_low : std::nan(""), ag ? ag->all.loa_high : std::nan(""),
                             o.ev.match.rmse_ms, o.ev.match.missing_pct,
                             i == 0 ? fmt::format("{:.3f}", gated_pct(results[i])) : std::string("nan"));
      }
      write_text_file(out / "comparison.csv", table);

      const GroundTruth truth = load_ground_truth(cmp_truth);
      dsp::BandpassSpec band = cfg.bandpass;
      band.fs = seq.fps;
      const std::vector<double> z = eval::reference_on_grid(truth, seq.fps, seq.size(), band);
      const double zr = dsp::rms(z);
      std::string ts = "time_s,truth,distanceppg,face_average\n";
      for (std::size_t t = 0; t < seq.size(); ++t)
        ts += fmt::format("{:.6f},{:.9g},{:.9g},{:.9g}\n", static_cast<double>(t) / seq.fps, zr > 0 ? z[t] / zr : 0.0,
                          results[0].ppg[t], results[1].ppg[t]);
      write_text_file(out / "timeseries.csv", ts);
      std::cout << fmt::format("compare: SNR distanceppg {:.2f} dB, face_average {:.2f} dB, delta {:.2f} dB\n",
                               evals[0].ev.mean_snr_db, base, evals[0].ev.mean_snr_db - base);
      return kOk;
    }
  } catch (const DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDegenerate;
  }
  return kUsage;
}

}  // namespace dppg::cli
