#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vageo/config.hpp"
#include "vageo/data.hpp"
#include "vageo/eval.hpp"
#include "vageo/log.hpp"
#include "vageo/model.hpp"
#include "vageo/train.hpp"

namespace vageo {

struct StepRecord {
  int64_t epoch = 0;
  int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainLoopOptions {
  int64_t max_steps = 0;  // when > 0, run exactly this many steps and ignore epochs
  int64_t start_epoch = 0;
  uint64_t shuffle_seed = 0;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(int64_t epoch, double mean_loss)> on_epoch_end;
};

struct TrainLoopResult {
  std::vector<StepRecord> steps;
  int64_t epochs_completed = 0;
};

// Shuffled mini-batch epochs with the halving schedule; the last batch of an
// epoch may be smaller than batch_size.
TrainLoopResult train_loop(GeoLocalizer& model, Adam& optimizer, const std::vector<PreparedSample>& samples,
                           const TrainConfig& config, const TrainLoopOptions& options = {});

// Mean detection loss over `samples` in eval mode (batch size 1).
double dataset_loss(GeoLocalizer& model, const std::vector<PreparedSample>& samples);

// Fills zero anchors with the mean training box size.
void resolve_anchors(RunConfig& config, const std::vector<PreparedSample>& samples);

struct TrainedModel {
  RunConfig config;  // with anchors resolved
  std::unique_ptr<GeoLocalizer> model;
  std::unique_ptr<Adam> optimizer;
  TrainLoopResult result;
};

// Builds a model from `config`, resolves its anchors on `train` and trains it.
TrainedModel train_from_config(RunConfig config, const DatasetManifest& train, const TrainLoopOptions& options = {});

struct SweepPoint {
  std::string parameter;  // "sigma" or "ring_weights"
  std::string value;
  RunConfig config;
};

std::vector<SweepPoint> sigma_sweep(const RunConfig& base, const std::vector<double>& sigmas);
std::vector<SweepPoint> ring_weight_sweep(const RunConfig& base,
                                          const std::vector<std::array<double, 4>>& weights);

struct SweepRow {
  int64_t rank = 0;  // 1 = best
  std::string parameter;
  std::string value;
  EvalReport report;
  double final_loss = 0.0;
};

// Trains one model per point (same seed and data) and ranks the results by
// acc@0.5, then acc@0.25, then mean IoU. `max_steps` > 0 overrides the epoch count.
std::vector<SweepRow> run_sweep(const std::vector<SweepPoint>& points, const DatasetManifest& train,
                                const DatasetManifest& eval, int64_t max_steps, const EventLog* log = nullptr);

// Writes sweep.csv, sweep.json and sweep.txt under `dir`.
void write_sweep_tables(const std::vector<SweepRow>& rows, const Json& base_config, const std::filesystem::path& dir);

}  // namespace vageo
