#pragma once

// The lifecycle commands behind the msm binary. Each takes the merged run
// configuration and writes its artifacts under config.workdir, echoing the
// configuration into every output.

#include "msm/run_config.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace msm {

struct GenDataSummary {
  std::size_t pairs = 0;
  double degrader_initial_loss = 0.0;
  double degrader_final_loss = 0.0;
  double degrader_win_rate = 0.0;  ///< share of validation pairs brought closer to the original (delta E)
};

/// Corpus PNGs + manifest, degrader checkpoint and its validation report.
GenDataSummary cmd_gen_data(const RunConfig& cfg, std::ostream& log);

struct TrainSummary {
  bool resumed_step1 = false;
  std::vector<double> step1_losses, step2_losses;
  double reconstruction_psnr = 0.0;
};

/// Step 1 (skipped when a matching step-1 checkpoint exists and resume is set), step 2,
/// the optional PieNet baseline, metrics log.
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log, bool resume = true);

/// Benchmark report as JSON and text under reports/.
BenchmarkReport cmd_eval(const RunConfig& cfg, std::ostream& log);

/// Blocks serving the HTTP API until the process is stopped.
void cmd_serve(const RunConfig& cfg, std::ostream& log);

/// One-shot personalization of input with the given (original, retouched) files.
void cmd_enhance(const RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& pairs,
                 const std::string& input, const std::string& output, const std::string& method, std::ostream& log);

/// Collects <name>_x.png / <name>_y.png pairs from a directory, sorted by name.
std::vector<std::pair<std::string, std::string>> pairs_in_directory(const std::string& dir);

}  // namespace msm
