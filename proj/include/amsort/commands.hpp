#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "amsort/config.hpp"
#include "amsort/metrics.hpp"
#include "amsort/predictor.hpp"
#include "amsort/sequence.hpp"
#include "amsort/synth.hpp"
#include "amsort/training.hpp"

namespace amsort::cli {

namespace fs = std::filesystem;

/// Sequence directories under `root` holding `rel` (e.g. "gt/gt.txt"), sorted by name.
std::vector<std::string> list_sequences(const fs::path& root, const std::string& rel);

/// A preset name ("dance-toy", "linear") or a scenario file. Writes
/// <out>/<name>/{gt/gt.txt,det/det.txt,scenario.txt}.
synth::Generated cmd_synth(const std::string& scenario, const fs::path& out, std::optional<std::uint64_t> seed,
                           const ImageDims& dims);

/// Ground-truth segments of every sequence under `gt_root`.
std::vector<train::TrajectorySegment> load_segments(const fs::path& gt_root, const config::Profile& p);

/// Trains from scratch on `gt_root` and writes the checkpoint; returns the loss trace.
train::TrainResult cmd_train(const fs::path& gt_root, const config::Profile& p, const fs::path& checkpoint,
                             const std::optional<fs::path>& loss_csv, bool verbose = false);

model::ModelParams load_model(const fs::path& checkpoint, const config::Profile& p);

/// Tracks every det/det.txt under `det_root`, writing <out>/<sequence>.txt.
/// `params` is required for the transformer predictor.
void cmd_track(const fs::path& det_root, const model::ModelParams* params, const config::Profile& p,
               const fs::path& out);

/// Scores <results>/<sequence>.txt against every gt/gt.txt under `gt_root`
/// (a missing result file counts as empty). Writes report.csv and
/// report.txt to `out` when given. The last entry is the "COMBINED" row.
std::vector<metrics::NamedReport> cmd_eval(const fs::path& gt_root, const fs::path& results,
                                           const config::Profile& p, const std::optional<fs::path>& out);

/// Sweeps one axis (T, p, cost, iou_threshold). For every value: train when
/// the axis changes training, track `eval_root`, evaluate, and write
/// <out>/<axis>_<value>/. Also writes <out>/summary.csv.
struct SweepRow {
  std::string value;
  metrics::EvalReport combined;
};
std::vector<SweepRow> cmd_sweep(const std::string& axis, const std::vector<std::string>& values,
                                const fs::path& train_root, const fs::path& eval_root, const config::Profile& p,
                                const fs::path& out, bool verbose = false);

std::string sweep_summary_csv(const std::string& axis, const std::vector<SweepRow>& rows);

}  // namespace amsort::cli
