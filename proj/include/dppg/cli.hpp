#pragma once

#include <filesystem>
#include <string>

#include "dppg/frameio.hpp"
#include "dppg/pipeline.hpp"

namespace dppg::cli {

enum ExitCode { kOk = 0, kDegenerate = 1, kUsage = 2 };

/// Applies run-config keys (the same names the flags use, with '_') onto
/// `cfg`. Unknown keys raise InputError. Returns the `estimator` key if set.
std::string apply_config(const KeyValues& kv, pipeline::EstimateConfig& cfg);

/// Writes ppg.csv, weights.csv, roi_traces.csv, regions.csv and epochs.csv.
void write_estimate(const pipeline::EstimateResult& r, const std::filesystem::path& dir);

/// Parses argv and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace dppg::cli
