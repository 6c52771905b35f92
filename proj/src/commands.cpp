#include "amsort/commands.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "amsort/checkpoint.hpp"
#include "amsort/error.hpp"
#include "amsort/mot_io.hpp"
#include "amsort/tracker.hpp"

namespace amsort::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

void require_dir(const fs::path& p) {
  if (!fs::is_directory(p)) throw UsageError("not a directory: " + p.string());
}

}  // namespace

std::vector<std::string> list_sequences(const fs::path& root, const std::string& rel) {
  require_dir(root);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::is_regular_file(e.path() / rel)) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no sequences with " + rel + " under " + root.string());
  return out;
}

synth::Generated cmd_synth(const std::string& scenario, const fs::path& out, std::optional<std::uint64_t> seed,
                           const ImageDims& dims) {
  synth::Scenario s;
  if (scenario == "dance-toy") {
    s = synth::dance_toy(seed.value_or(0));
  } else if (scenario == "linear") {
    s = synth::linear_scenario(seed.value_or(0));
  } else {
    s = synth::read_scenario_file(scenario);
    if (seed) s.seed = *seed;
  }
  const auto g = synth::generate(s);
  synth::emit_mot_files(g, out, dims);
  write_text(out / s.name / "scenario.txt", synth::format_scenario(s));
  return g;
}

std::vector<train::TrajectorySegment> load_segments(const fs::path& gt_root, const config::Profile& p) {
  std::vector<train::TrajectorySegment> segs;
  int index = 0;
  for (const auto& name : list_sequences(gt_root, "gt/gt.txt")) {
    const auto gt = io::to_sequence(io::read_mot_file(gt_root / name / "gt" / "gt.txt"), p.dims);
    auto s = train::segment_trajectories(gt, p.model.history, index++);
    segs.insert(segs.end(), s.begin(), s.end());
  }
  return train::subsample(segs, p.train.max_segments, p.train.seed);
}

train::TrainResult cmd_train(const fs::path& gt_root, const config::Profile& p, const fs::path& checkpoint,
                             const std::optional<fs::path>& loss_csv, bool verbose) {
  const auto segs = load_segments(gt_root, p);
  if (segs.empty()) throw DataError("no trajectory runs longer than T=" + std::to_string(p.model.history));
  train::EpochCallback cb;
  if (verbose) {
    cb = [](const train::EpochStats& e) {
      if (e.has_val) {
        std::fprintf(stderr, "epoch %zu  loss %.6f  val %.6f\n", e.epoch, e.mean_loss, e.val_loss);
      } else {
        std::fprintf(stderr, "epoch %zu  loss %.6f\n", e.epoch, e.mean_loss);
      }
    };
  }
  auto res = train::train(segs, model::ModelParams::init(p.model, p.train.seed), p.model, p.train, cb);
  if (checkpoint.has_parent_path()) fs::create_directories(checkpoint.parent_path());
  ad::write_checkpoint(checkpoint, res.params.to_arrays());
  if (loss_csv) write_text(*loss_csv, train::loss_trace_csv(res.trace));
  return res;
}

model::ModelParams load_model(const fs::path& checkpoint, const config::Profile& p) {
  if (!fs::is_regular_file(checkpoint)) throw UsageError("checkpoint not found: " + checkpoint.string());
  const auto arrays = ad::read_checkpoint(checkpoint);
  try {
    return model::ModelParams::from_arrays(p.model, arrays);
  } catch (const std::invalid_argument& e) {
    throw DataError(checkpoint.string() + " does not fit profile '" + p.name + "': " + e.what());
  }
}

void cmd_track(const fs::path& det_root, const model::ModelParams* params, const config::Profile& p,
               const fs::path& out) {
  if (p.predictor == config::PredictorKind::Transformer && !params) {
    throw UsageError("the transformer predictor needs --checkpoint");
  }
  for (const auto& name : list_sequences(det_root, "det/det.txt")) {
    const auto dets = io::to_sequence(io::read_mot_file(det_root / name / "det" / "det.txt"), p.dims);
    Sequence result;
    if (p.predictor == config::PredictorKind::Kalman) {
      track::KalmanModel m(p.kalman);
      result = track::run_sequence(dets, m, p.tracker());
    } else {
      track::TransformerModel m(*params, p.model);
      result = track::run_sequence(dets, m, p.tracker());
    }
    io::write_mot_file(out / (name + ".txt"), io::to_records(result, p.dims));
  }
}

std::vector<metrics::NamedReport> cmd_eval(const fs::path& gt_root, const fs::path& results,
                                           const config::Profile& p, const std::optional<fs::path>& out) {
  require_dir(results);
  std::vector<metrics::NamedReport> reports;
  for (const auto& name : list_sequences(gt_root, "gt/gt.txt")) {
    const auto gt = io::to_sequence(io::read_mot_file(gt_root / name / "gt" / "gt.txt"), p.dims);
    const auto rpath = results / (name + ".txt");
    Sequence hyp;
    if (fs::exists(rpath)) hyp = io::to_sequence(io::read_mot_file(rpath), p.dims);
    reports.push_back({name, metrics::evaluate(gt, hyp, p.eval_iou)});
  }
  reports.push_back({"COMBINED", metrics::combine(reports)});
  if (out) {
    write_text(*out / "report.csv", metrics::report_csv(reports));
    write_text(*out / "report.txt", metrics::report_text(reports));
  }
  return reports;
}

namespace {

bool axis_needs_training(const std::string& axis) { return axis == "T" || axis == "p"; }

config::Profile with_axis(config::Profile p, const std::string& axis, const std::string& value) {
  if (axis == "T") {
    p.model.history = config::to_size("T", value);
  } else if (axis == "p") {
    p.train.mask_prob = config::to_real("p", value);
  } else if (axis == "cost") {
    try {
      p.assoc.weights = assoc::cost_profile(value);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (axis == "iou_threshold") {
    p.assoc.iou_threshold = config::to_real("iou_threshold", value);
  } else {
    throw UsageError("unknown sweep axis '" + axis + "' (expected T, p, cost or iou_threshold)");
  }
  p.validate();
  return p;
}

}  // namespace

std::vector<SweepRow> cmd_sweep(const std::string& axis, const std::vector<std::string>& values,
                                const fs::path& train_root, const fs::path& eval_root, const config::Profile& p,
                                const fs::path& out, bool verbose) {
  if (values.empty()) throw UsageError("sweep: no values given");
  std::vector<config::Profile> profiles;
  for (const auto& v : values) profiles.push_back(with_axis(p, axis, v));

  const bool transformer = p.predictor == config::PredictorKind::Transformer;
  std::optional<model::ModelParams> shared;
  if (transformer && !axis_needs_training(axis)) {
    shared = cmd_train(train_root, p, out / "model.ckpt", out / "loss.csv", verbose).params;
  }
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& prof = profiles[i];
    const fs::path dir = out / (axis + "_" + values[i]);
    std::optional<model::ModelParams> own;
    if (transformer && axis_needs_training(axis)) {
      own = cmd_train(train_root, prof, dir / "model.ckpt", dir / "loss.csv", verbose).params;
    }
    const model::ModelParams* params = own ? &*own : (shared ? &*shared : nullptr);
    cmd_track(eval_root, params, prof, dir / "results");
    const auto reports = cmd_eval(eval_root, dir / "results", prof, dir);
    rows.push_back({values[i], reports.back().report});
    if (verbose) std::fprintf(stderr, "%s=%s  idf1 %.4f\n", axis.c_str(), values[i].c_str(), rows.back().combined.idf1);
  }
  write_text(out / "summary.csv", sweep_summary_csv(axis, rows));
  return rows;
}

std::string sweep_summary_csv(const std::string& axis, const std::vector<SweepRow>& rows) {
  std::string s = "axis,value,mota,idf1,idsw,fp,fn,gt\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& e = r.combined;
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%d,%d,%d,%d\n", axis.c_str(), r.value.c_str(), e.mota, e.idf1,
                  e.id_switches, e.fp, e.fn, e.gt_count);
    s += buf;
  }
  return s;
}

}  // namespace amsort::cli
