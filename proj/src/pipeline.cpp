#include "vageo/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "vageo/error.hpp"

namespace vageo {

TrainLoopResult train_loop(GeoLocalizer& model, Adam& optimizer, const std::vector<PreparedSample>& samples,
                           const TrainConfig& config, const TrainLoopOptions& options) {
  config.validate();
  if (samples.empty()) throw PreconditionError("no training samples");
  TrainLoopResult result;
  std::vector<size_t> order(samples.size());
  int64_t step = 0;
  for (int64_t epoch = options.start_epoch; epoch < config.epochs || options.max_steps > 0; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(options.shuffle_seed + static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const double lr = lr_schedule(epoch, config);
    double total = 0.0;
    int64_t batches = 0;
    for (size_t first = 0; first < order.size(); first += static_cast<size_t>(config.batch_size)) {
      const size_t last = std::min(order.size(), first + static_cast<size_t>(config.batch_size));
      const Batch batch = make_batch(samples, std::span<const size_t>(order.data() + first, last - first));
      const StepRecord rec{epoch, step, lr, train_step(model, optimizer, batch, lr)};
      result.steps.push_back(rec);
      if (options.on_step) options.on_step(rec);
      total += rec.loss;
      ++batches;
      ++step;
      if (options.max_steps > 0 && step >= options.max_steps) break;
    }
    ++result.epochs_completed;
    if (options.on_epoch_end) options.on_epoch_end(epoch, total / static_cast<double>(batches));
    if (options.max_steps > 0 && step >= options.max_steps) break;
  }
  return result;
}

double dataset_loss(GeoLocalizer& model, const std::vector<PreparedSample>& samples) {
  if (samples.empty()) throw PreconditionError("no samples");
  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Batch b = make_batch(samples, std::span<const size_t>(&i, 1));
    const DetectionGrid grid = model.forward(b.queries, b.references, Mode::eval);
    total += detection_loss(grid, b.boxes, model.stride(), model.config().anchors, model.config().box_weight).value;
  }
  return total / static_cast<double>(samples.size());
}

void resolve_anchors(RunConfig& config, const std::vector<PreparedSample>& samples) {
  if (config.anchors.w > 0 && config.anchors.h > 0) return;
  config.anchors = mean_box_size(samples);
}

TrainedModel train_from_config(RunConfig config, const DatasetManifest& train, const TrainLoopOptions& options) {
  config.validate();
  const std::vector<PreparedSample> samples = prepare_samples(train, config.input, config.encoder);
  resolve_anchors(config, samples);
  TrainedModel t;
  t.config = config;
  t.model = std::make_unique<GeoLocalizer>(config.model_config());
  t.optimizer = std::make_unique<Adam>(t.model->registry());
  TrainLoopOptions opts = options;
  if (opts.shuffle_seed == 0) opts.shuffle_seed = config.seed;
  t.result = train_loop(*t.model, *t.optimizer, samples, config.train, opts);
  return t;
}

std::vector<SweepPoint> sigma_sweep(const RunConfig& base, const std::vector<double>& sigmas) {
  std::vector<SweepPoint> points;
  for (double sigma : sigmas) {
    SweepPoint p{"sigma", "", base};
    p.config.encoder.ground.sigma = sigma;
    p.config.encoder.ground.validate();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", sigma);
    p.value = buf;
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<SweepPoint> ring_weight_sweep(const RunConfig& base, const std::vector<std::array<double, 4>>& weights) {
  std::vector<SweepPoint> points;
  for (const auto& w : weights) {
    SweepPoint p{"ring_weights", "", base};
    p.config.encoder.drone.weights = w;
    p.config.encoder.drone.validate();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f/%.2f/%.2f/%.2f", w[0], w[1], w[2], w[3]);
    p.value = buf;
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<SweepRow> run_sweep(const std::vector<SweepPoint>& points, const DatasetManifest& train,
                                const DatasetManifest& eval, int64_t max_steps, const EventLog* log) {
  if (points.empty()) throw PreconditionError("sweep has no settings");
  std::vector<SweepRow> rows;
  for (const auto& point : points) {
    TrainLoopOptions opts;
    opts.max_steps = max_steps;
    TrainedModel t = train_from_config(point.config, train, opts);
    SweepRow row;
    row.parameter = point.parameter;
    row.value = point.value;
    row.final_loss = t.result.steps.empty() ? 0.0 : t.result.steps.back().loss;
    row.report = evaluate(model_predictor(*t.model, t.config.input, t.config.encoder), eval);
    if (log) {
      log->write("sweep_point", {{"parameter", row.parameter},
                                 {"value", row.value},
                                 {"acc_at_25", row.report.acc_at_25},
                                 {"acc_at_50", row.report.acc_at_50},
                                 {"mean_iou", row.report.mean_iou},
                                 {"final_loss", row.final_loss}});
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.report.acc_at_50 != b.report.acc_at_50) return a.report.acc_at_50 > b.report.acc_at_50;
    if (a.report.acc_at_25 != b.report.acc_at_25) return a.report.acc_at_25 > b.report.acc_at_25;
    return a.report.mean_iou > b.report.mean_iou;
  });
  for (size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<int64_t>(i + 1);
  return rows;
}

void write_sweep_tables(const std::vector<SweepRow>& rows, const Json& base_config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "sweep.csv");
  std::ofstream txt(dir / "sweep.txt");
  if (!csv || !txt) throw IoError("cannot write sweep tables under '" + dir.string() + "'");
  csv << "rank,parameter,value,acc_at_25,acc_at_50,mean_iou,final_loss,n_samples\n";
  txt << "rank  parameter     value                 acc@0.25  acc@0.5  mean_iou  final_loss\n";
  Json table = Json::array();
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%d,%s,%s,%.6f,%.6f,%.6f,%.6g,%lld\n", static_cast<int>(r.rank), r.parameter.c_str(),
                  r.value.c_str(), r.report.acc_at_25, r.report.acc_at_50, r.report.mean_iou, r.final_loss,
                  static_cast<long long>(r.report.n_samples));
    csv << line;
    std::snprintf(line, sizeof line, "%-5d %-13s %-21s %-9.4f %-8.4f %-9.4f %.4g\n", static_cast<int>(r.rank),
                  r.parameter.c_str(), r.value.c_str(), r.report.acc_at_25, r.report.acc_at_50, r.report.mean_iou,
                  r.final_loss);
    txt << line;
    table.push_back({{"rank", r.rank},
                     {"parameter", r.parameter},
                     {"value", r.value},
                     {"acc_at_25", r.report.acc_at_25},
                     {"acc_at_50", r.report.acc_at_50},
                     {"mean_iou", r.report.mean_iou},
                     {"final_loss", r.final_loss},
                     {"n_samples", r.report.n_samples}});
  }
  std::ofstream json(dir / "sweep.json");
  json << Json{{"config", base_config}, {"rows", table}}.dump(2) << '\n';
  if (!csv || !txt || !json) throw IoError("failed writing sweep tables under '" + dir.string() + "'");
}

}  // namespace vageo
