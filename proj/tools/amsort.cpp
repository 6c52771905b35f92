#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "amsort/commands.hpp"
#include "amsort/config.hpp"
#include "amsort/error.hpp"

namespace {

using namespace amsort;

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumeric = 3;

struct Common {
  std::string profile = "toy";
  std::optional<std::uint64_t> seed;
  std::string predictor;
  std::string cost_profile;
};

config::Profile resolve(const Common& c) {
  auto p = config::load_profile(c.profile);
  config::KeyValues kv;
  if (c.seed) kv.emplace_back("train.seed", std::to_string(*c.seed));
  if (!c.predictor.empty()) kv.emplace_back("predictor", c.predictor);
  if (!c.cost_profile.empty()) kv.emplace_back("assoc.cost_profile", c.cost_profile);
  config::apply_overrides(p, kv);
  p.validate();
  return p;
}

void add_common(CLI::App* app, Common& c, bool tracking) {
  app->add_option("--profile", c.profile, "paper, toy, or a key = value profile file")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed");
  if (tracking) {
    app->add_option("--predictor", c.predictor, "kalman or transformer");
    app->add_option("--cost-profile", c.cost_profile, "iou, iou_dtheta, iou_l1 or iou_dtheta_l1");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformer motion prediction for tracking-by-detection"};
  app.require_subcommand(1);

  Common synth_c, train_c, track_c, eval_c, sweep_c, prof_c;
  std::string scenario, gt_root, det_root, results, out, checkpoint, loss_csv, axis, train_root, eval_root;
  std::vector<std::string> values;
  bool quiet = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario as MOTChallenge files");
  synth->add_option("scenario", scenario, "Scenario file or preset (dance-toy, linear)")->required();
  synth->add_option("--out", out, "Output dataset root")->required();
  add_common(synth, synth_c, false);

  auto* train = app.add_subcommand("train", "Train the motion predictor on ground-truth tracks");
  train->add_option("gt_root", gt_root, "Dataset root with <seq>/gt/gt.txt")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--loss-csv", loss_csv, "Write the per-epoch loss trace here");
  train->add_flag("--quiet", quiet, "No per-epoch progress");
  add_common(train, train_c, false);

  auto* track = app.add_subcommand("track", "Run the tracker over detections");
  track->add_option("det_root", det_root, "Dataset root with <seq>/det/det.txt")->required();
  track->add_option("--checkpoint", checkpoint, "Trained predictor (transformer only)");
  track->add_option("--out", out, "Results directory, one <seq>.txt per sequence")->required();
  add_common(track, track_c, true);

  auto* eval = app.add_subcommand("eval", "Score tracker results against ground truth");
  eval->add_option("gt_root", gt_root, "Dataset root with <seq>/gt/gt.txt")->required();
  eval->add_option("results", results, "Directory of <seq>.txt results")->required();
  eval->add_option("--out", out, "Directory for report.csv and report.txt");
  add_common(eval, eval_c, false);

  auto* sweep = app.add_subcommand("sweep", "Train, track and evaluate over one configuration axis");
  sweep->add_option("--axis", axis, "T, p, cost or iou_threshold")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("train_root", train_root, "Training dataset root")->required();
  sweep->add_option("eval_root", eval_root, "Evaluation dataset root")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_flag("--quiet", quiet, "No progress output");
  add_common(sweep, sweep_c, true);

  auto* prof = app.add_subcommand("profile", "Print the resolved configuration profile");
  add_common(prof, prof_c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*synth) {
      const auto p = resolve(synth_c);
      const auto g = cli::cmd_synth(scenario, out, synth_c.seed, p.dims);
      std::printf("%s: %zu ground-truth boxes, %zu detections\n", g.scenario.name.c_str(), g.ground_truth.size(),
                  g.detections.size());
    } else if (*train) {
      const auto p = resolve(train_c);
      std::optional<cli::fs::path> csv;
      if (!loss_csv.empty()) csv = loss_csv;
      const auto r = cli::cmd_train(gt_root, p, out, csv, !quiet);
      if (!r.trace.empty()) std::printf("final loss %.6f\n", r.trace.back().mean_loss);
    } else if (*track) {
      const auto p = resolve(track_c);
      std::optional<model::ModelParams> params;
      if (p.predictor == config::PredictorKind::Transformer) {
        if (checkpoint.empty()) throw UsageError("the transformer predictor needs --checkpoint");
        params = cli::load_model(checkpoint, p);
      }
      cli::cmd_track(det_root, params ? &*params : nullptr, p, out);
    } else if (*eval) {
      const auto p = resolve(eval_c);
      std::optional<cli::fs::path> dir;
      if (!out.empty()) dir = out;
      std::cout << metrics::report_text(cli::cmd_eval(gt_root, results, p, dir));
    } else if (*sweep) {
      const auto p = resolve(sweep_c);
      const auto rows = cli::cmd_sweep(axis, values, train_root, eval_root, p, out, !quiet);
      std::cout << cli::sweep_summary_csv(axis, rows);
    } else if (*prof) {
      std::cout << config::format_profile(resolve(prof_c));
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  }
  return 0;
}
