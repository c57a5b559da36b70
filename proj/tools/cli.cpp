#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "vageo/checkpoint.hpp"
#include "vageo/config.hpp"
#include "vageo/data.hpp"
#include "vageo/error.hpp"
#include "vageo/eval.hpp"
#include "vageo/image.hpp"
#include "vageo/log.hpp"
#include "vageo/npy.hpp"
#include "vageo/pipeline.hpp"
#include "vageo/synth.hpp"

namespace vageo::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigKey = "vageo:config";

// Flags shared by every command that builds a RunConfig. Unset options leave
// the preset/config-file value alone.
struct Overrides {
  std::string config_file;
  std::optional<std::string> preset;
  std::optional<std::string> view;
  std::optional<uint64_t> seed;
  std::optional<double> sigma;
  std::optional<std::string> kernel;
  std::vector<double> ring_weights;
  bool no_normalize = false;
  bool no_csha = false;
  std::optional<int64_t> reduction;
  std::optional<int64_t> csha_kernel;
  std::optional<std::string> backbone;
  std::optional<double> lr;
  std::optional<int64_t> batch_size;
  std::optional<int64_t> epochs;
  std::optional<int64_t> halve_every;
};

void add_encoder_flags(CLI::App* app, Overrides& o) {
  app->add_option("--sigma", o.sigma, "Ground encoding width");
  app->add_option("--kernel", o.kernel, "Ground kernel: paper-squared or laplace-absolute");
  app->add_flag("--no-normalize", o.no_normalize, "Keep the unnormalised ground kernel");
  app->add_option("--ring-weights", o.ring_weights, "Four drone ring weights, innermost first")->expected(4);
}

void add_run_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "JSON run configuration (flags take precedence)");
  app->add_option("--preset", o.preset, "default, toy or full");
  app->add_option("--view", o.view, "ground or drone");
  app->add_option("--seed", o.seed, "Seed for initialisation and shuffling");
  add_encoder_flags(app, o);
  app->add_flag("--no-csha", o.no_csha, "Disable the attention block");
  app->add_option("--reduction", o.reduction, "Channel attention reduction ratio");
  app->add_option("--csha-kernel", o.csha_kernel, "Spatial attention kernel size (odd)");
  app->add_option("--backbone", o.backbone, "Backbone preset for both branches");
  app->add_option("--lr", o.lr, "Initial learning rate");
  app->add_option("--batch-size", o.batch_size, "Mini-batch size");
  app->add_option("--epochs", o.epochs, "Number of epochs");
  app->add_option("--halve-every", o.halve_every, "Epochs between learning-rate halvings");
}

void apply_encoder_flags(RunConfig& c, const Overrides& o) {
  if (o.sigma) c.encoder.ground.sigma = *o.sigma;
  if (o.kernel) c.encoder.ground.kernel = ground_kernel_from_string(*o.kernel);
  if (o.no_normalize) c.encoder.ground.normalize_peak = false;
  if (!o.ring_weights.empty()) std::copy(o.ring_weights.begin(), o.ring_weights.end(), c.encoder.drone.weights.begin());
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what(), 0);
  }
}

// preset -> config file -> flags; `base` (e.g. a checkpoint's config) replaces the preset when given.
RunConfig resolve_config(const Overrides& o, std::optional<QueryView> fallback_view, const Json* base = nullptr) {
  const Json file = o.config_file.empty() ? Json::object() : read_json_file(o.config_file);
  QueryView view = fallback_view.value_or(QueryView::drone);
  if (base && base->contains("view")) view = query_view_from_string((*base)["view"].get<std::string>());
  if (file.contains("view")) view = query_view_from_string(file["view"].get<std::string>());
  if (o.view) view = query_view_from_string(*o.view);
  std::string preset = "default";
  if (file.contains("preset")) preset = file["preset"].get<std::string>();
  if (o.preset) preset = *o.preset;

  RunConfig c = base ? merge_json(preset_config("default", view), *base) : preset_config(preset, view);
  c = merge_json(c, file);
  if (o.preset && base) {
    const RunConfig p = preset_config(*o.preset, view);
    c.preset = p.preset;
    c.train = p.train;
  }
  c.view = view;
  if (o.seed) c.seed = *o.seed;
  apply_encoder_flags(c, o);
  if (o.no_csha) c.use_csha = false;
  if (o.reduction) c.csha.reduction = *o.reduction;
  if (o.csha_kernel) c.csha.kernel = *o.csha_kernel;
  if (o.backbone) c.query_backbone = c.reference_backbone = backbone_preset_from_string(*o.backbone);
  if (o.lr) c.train.lr0 = *o.lr;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.halve_every) c.train.halve_every = *o.halve_every;
  c.validate();
  return c;
}

fs::path under_root(const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : output_root() / path;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path)) throw ValidationError(what + " '" + path + "' not found");
}

std::unique_ptr<GeoLocalizer> model_from_checkpoint(const std::string& path, RunConfig& config) {
  require_file(path, "checkpoint");
  const CheckpointHeader header = read_checkpoint_header(path);
  config = merge_json(preset_config("default", QueryView::drone), header.config);
  auto model = std::make_unique<GeoLocalizer>(config.model_config());
  load_checkpoint(path, *model, nullptr);
  return model;
}

Json report_json(const EvalReport& r) {
  return {{"acc_at_25", r.acc_at_25}, {"acc_at_50", r.acc_at_50}, {"mean_iou", r.mean_iou}, {"n_samples", r.n_samples}};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int64_t n = 0;
  uint64_t seed = 0;
  std::string view = "drone";
  std::string out = "synth";
  std::vector<int64_t> reference_size;
  std::vector<int64_t> query_size;
};

int cmd_synth(const SynthArgs& a, const EventLog& log) {
  SynthConfig sc;
  sc.n = a.n;
  sc.seed = a.seed;
  sc.view = query_view_from_string(a.view);
  sc.query = default_query_dims(sc.view);
  if (!a.reference_size.empty()) sc.reference = {a.reference_size[0], a.reference_size[1]};
  if (!a.query_size.empty()) sc.query = {a.query_size[0], a.query_size[1]};
  const fs::path out = under_root(a.out);
  const DatasetManifest m = synth_generate(sc, out);
  log.write("synth", {{"n", m.samples.size()},
                      {"seed", a.seed},
                      {"view", a.view},
                      {"manifest", (out / "manifest.jsonl").string()}});
  return kSuccess;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Overrides o;
  std::string data;
  std::string val;
  std::string out = "run";
  std::string checkpoint;
  std::string resume;
  int64_t max_steps = 0;
};

int cmd_train(const TrainArgs& a, EventLog log) {
  require_file(a.data, "manifest");
  const DatasetManifest train = load_manifest(a.data);
  if (train.samples.empty()) throw ValidationError("manifest '" + a.data + "' has no samples");
  std::optional<Json> resume_config;
  if (!a.resume.empty()) {
    require_file(a.resume, "checkpoint");
    resume_config = read_checkpoint_header(a.resume).config;
  }
  RunConfig config = resolve_config(a.o, train.samples.front().view, resume_config ? &*resume_config : nullptr);
  const fs::path out = under_root(a.out);
  fs::create_directories(out);
  config.data = fs::absolute(a.data).string();
  config.output_dir = out.string();
  config.checkpoint = a.checkpoint.empty() ? (out / "checkpoint.vgck").string() : under_root(a.checkpoint).string();

  const std::vector<PreparedSample> samples = prepare_samples(train, config.input, config.encoder);
  resolve_anchors(config, samples);
  GeoLocalizer model(config.model_config());
  Adam optimizer(model.registry());
  TrainLoopOptions opts;
  opts.max_steps = a.max_steps;
  opts.shuffle_seed = config.seed;
  if (!a.resume.empty()) {
    const CheckpointHeader h = load_checkpoint(a.resume, model, &optimizer);
    opts.start_epoch = h.epoch + 1;
  }

  std::ofstream loss_log(out / "train_log.jsonl");
  log.add_sink(&loss_log);
  write_text(out / "config.json", to_json(config).dump(2) + "\n");
  log.write("train_start", {{"config", to_json(config)}, {"samples", samples.size()}, {"parameters", model.parameter_count()}});

  std::optional<std::vector<PreparedSample>> val;
  if (!a.val.empty()) {
    require_file(a.val, "validation manifest");
    val = prepare_samples(load_manifest(a.val), config.input, config.encoder);
  }
  int64_t last_step = 0;
  int64_t last_epoch = opts.start_epoch - 1;
  opts.on_step = [&](const StepRecord& r) {
    last_step = r.step + 1;
    log.write("step", {{"epoch", r.epoch}, {"step", r.step}, {"lr", r.lr}, {"loss", r.loss}});
  };
  opts.on_epoch_end = [&](int64_t epoch, double mean_loss) {
    last_epoch = epoch;
    Json fields{{"epoch", epoch}, {"mean_loss", mean_loss}};
    if (val) fields["val_loss"] = dataset_loss(model, *val);
    log.write("epoch", fields);
    save_checkpoint(config.checkpoint, config, model, &optimizer, epoch, last_step);
  };
  const auto t0 = std::chrono::steady_clock::now();
  const TrainLoopResult result = train_loop(model, optimizer, samples, config.train, opts);
  if (result.steps.empty()) save_checkpoint(config.checkpoint, config, model, &optimizer, last_epoch, 0);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.write("train_end", {{"steps", result.steps.size()},
                          {"epochs", result.epochs_completed},
                          {"initial_loss", result.steps.empty() ? 0.0 : result.steps.front().loss},
                          {"final_loss", result.steps.empty() ? 0.0 : result.steps.back().loss},
                          {"seconds", seconds},
                          {"checkpoint", config.checkpoint}});
  return kSuccess;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string out = "eval";
  bool oracle = false;
  bool overlays = false;
};

int cmd_eval(const EvalArgs& a, const EventLog& log) {
  require_file(a.data, "manifest");
  if (!a.oracle && a.checkpoint.empty()) throw CLI::ValidationError("--checkpoint", "required unless --oracle is given");
  const DatasetManifest m = load_manifest(a.data);
  RunConfig config = preset_config("default", m.samples.empty() ? QueryView::drone : m.samples.front().view);
  std::unique_ptr<GeoLocalizer> model;
  if (!a.oracle) model = model_from_checkpoint(a.checkpoint, config);
  config.data = fs::absolute(a.data).string();
  const Predictor predictor = a.oracle ? oracle_predictor() : model_predictor(*model, config.input, config.encoder);

  std::vector<BBox> preds;
  const Predictor recording = [&](size_t i, const Sample& s) {
    preds.push_back(predictor(i, s));
    return preds.back();
  };
  const EvalReport report = evaluate(recording, m);

  const fs::path out = under_root(a.out);
  fs::create_directories(out);
  Json per_sample = Json::array();
  for (size_t i = 0; i < m.samples.size(); ++i) {
    const BBox& p = preds[i];
    per_sample.push_back({{"query", m.samples[i].query_path.string()},
                          {"pred", {p.cx, p.cy, p.w, p.h}},
                          {"iou", report.ious[i]}});
  }
  const Json cfg = to_json(config);
  Json record{{"config", cfg},
              {"predictor", a.oracle ? "oracle" : "checkpoint"},
              {"checkpoint", a.oracle ? "" : fs::absolute(a.checkpoint).string()},
              {"report", report_json(report)},
              {"samples", per_sample}};
  write_text(out / "report.json", record.dump(2) + "\n");
  char text[512];
  std::snprintf(text, sizeof text,
                "samples     %lld\nacc@0.25    %.4f\nacc@0.5     %.4f\nmean_iou    %.4f\npredictor   %s\n",
                static_cast<long long>(report.n_samples), report.acc_at_25, report.acc_at_50, report.mean_iou,
                a.oracle ? "oracle" : a.checkpoint.c_str());
  write_text(out / "report.txt", std::string(text) + "config      " + cfg.dump() + "\n");

  if (a.overlays) {
    fs::create_directories(out / "overlays");
    for (size_t i = 0; i < m.samples.size(); ++i) {
      Image img = read_png(m.samples[i].reference_path);
      draw_box(img, m.samples[i].gt_box, {0, 255, 0});
      draw_box(img, preds[i], {255, 0, 0});
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.png", i);
      write_png(out / "overlays" / name, img, {{kConfigKey, cfg.dump()}});
    }
  }
  Json fields = report_json(report);
  fields["report"] = (out / "report.json").string();
  log.write("eval", fields);
  return kSuccess;
}

// ---------------------------------------------------------------- encode

struct EncodeArgs {
  Overrides o;
  std::vector<int64_t> click;
  std::vector<int64_t> size;
  std::string query;
  std::string out = "encoding.png";
  std::string checkpoint;
  bool npy = false;
  bool attn = false;
};

void write_npy_with_sidecar(const fs::path& png_path, const std::vector<double>& values, int64_t h, int64_t w,
                            const Json& cfg) {
  fs::path npy = png_path;
  npy.replace_extension(".npy");
  write_npy_f32(npy, values, {h, w});
  fs::path sidecar = png_path;
  sidecar.replace_extension(".json");
  write_text(sidecar, Json{{"config", cfg}, {"shape", {h, w}}}.dump(2) + "\n");
}

int cmd_encode(const EncodeArgs& a, const EventLog& log) {
  const ClickPoint click{a.click[0], a.click[1]};
  const fs::path out = under_root(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  if (a.attn) {
    if (a.checkpoint.empty() || a.query.empty()) {
      throw CLI::ValidationError("--attn", "needs --checkpoint and --query");
    }
    require_file(a.query, "query image");
    RunConfig config;
    auto model = model_from_checkpoint(a.checkpoint, config);
    if (!config.use_csha) throw ValidationError("checkpoint was trained without the attention block");
    if (a.o.view) config.view = query_view_from_string(*a.o.view);
    const Image image = read_png(a.query);
    const ImageDims native{image.height, image.width};
    check_click(native.height, native.width, click);
    const ClickPoint scaled = rescale_click(click, native, config.input.query);
    const Tensor q = resize_bilinear(image_to_tensor(image), config.input.query.height, config.input.query.width);
    const Tensor enc = attach_encoding(q, encode_query(config.view, config.input.query, scaled, config.encoder));
    Shape shape{1};
    shape.insert(shape.end(), enc.shape().begin(), enc.shape().end());
    model->query_branch(enc.reshaped(shape), Mode::eval);
    const Tensor& att = model->last_attention();
    const Tensor up = resize_bilinear(att.reshaped({1, att.dim(2), att.dim(3)}), native.height, native.width);
    const Json cfg = to_json(config);
    const Image heat = heatmap_image(up.storage(), native.height, native.width, 0.5, 1.0);
    write_png(out, blend(image, heat, 0.5), {{kConfigKey, cfg.dump()}});
    if (a.npy) write_npy_with_sidecar(out, up.storage(), native.height, native.width, cfg);
    log.write("encode", {{"kind", "attention"}, {"out", out.string()}, {"height", native.height}, {"width", native.width}});
    return kSuccess;
  }

  RunConfig config = resolve_config(a.o, QueryView::drone);
  ImageDims dims = config.input.query;
  if (!a.size.empty()) dims = {a.size[0], a.size[1]};
  if (!a.query.empty()) {
    require_file(a.query, "query image");
    const auto [h, w] = png_size(a.query);
    dims = {h, w};
  }
  const EncodingMap map = encode_query(config.view, dims, click, config.encoder);
  const Json cfg = to_json(config);
  write_png(out, gray_image(map.values, dims.height, dims.width, map.max_value()), {{kConfigKey, cfg.dump()}});
  if (a.npy) write_npy_with_sidecar(out, map.values, dims.height, dims.width, cfg);
  log.write("encode", {{"kind", "positional"},
                       {"view", to_string(config.view)},
                       {"out", out.string()},
                       {"height", dims.height},
                       {"width", dims.width},
                       {"max", map.max_value()}});
  return kSuccess;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  Overrides o;
  std::string data;
  std::string eval_data;
  std::string param = "auto";
  std::vector<double> sigmas{5, 15, 25, 50};
  std::string out = "sweep";
  int64_t max_steps = 0;
};

int cmd_sweep(const SweepArgs& a, const EventLog& log) {
  require_file(a.data, "manifest");
  const DatasetManifest train = load_manifest(a.data);
  if (train.samples.empty()) throw ValidationError("manifest '" + a.data + "' has no samples");
  if (!a.eval_data.empty()) require_file(a.eval_data, "evaluation manifest");
  const DatasetManifest eval = a.eval_data.empty() ? train : load_manifest(a.eval_data);
  RunConfig base = resolve_config(a.o, train.samples.front().view);
  base.data = fs::absolute(a.data).string();
  std::string param = a.param;
  if (param == "auto") param = base.view == QueryView::ground ? "sigma" : "ring-weights";
  std::vector<SweepPoint> points;
  if (param == "sigma" || param == "both") {
    auto p = sigma_sweep(base, a.sigmas);
    points.insert(points.end(), p.begin(), p.end());
  }
  if (param == "ring-weights" || param == "both") {
    auto p = ring_weight_sweep(base, {kDroneWeightAblation.begin(), kDroneWeightAblation.end()});
    points.insert(points.end(), p.begin(), p.end());
  }
  if (points.empty()) throw CLI::ValidationError("--param", "expected sigma, ring-weights, both or auto");
  const fs::path out = under_root(a.out);
  const std::vector<SweepRow> rows = run_sweep(points, train, eval, a.max_steps, &log);
  write_sweep_tables(rows, to_json(base), out);
  std::ifstream table(out / "sweep.txt");
  std::cerr << table.rdbuf();
  log.write("sweep", {{"rows", rows.size()}, {"table", (out / "sweep.csv").string()}, {"best", rows.front().value}});
  return kSuccess;
}

// ---------------------------------------------------------------- adapt

int cmd_adapt(const std::string& csv, const std::string& out_path, const EventLog& log) {
  require_file(csv, "annotation table");
  const DatasetManifest m = convert_annotation_csv(csv);
  const fs::path out = under_root(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_manifest(out, m);
  log.write("adapt", {{"samples", m.samples.size()},
                      {"manifest", out.string()},
                      {"benchmark_dims", m.matches_expected_dims()}});
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Cross-view object geo-localisation toolkit", "vageo"};
  app.require_subcommand(1);
  std::string log_file;
  app.add_option("--log-file", log_file, "Also append JSON log lines to this file");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic cross-view dataset");
  s->add_option("--n", synth.n, "Number of scenes")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--view", synth.view, "ground or drone")->check(CLI::IsMember({"ground", "drone"}));
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--reference-size", synth.reference_size, "Reference height and width")->expected(2);
  s->add_option("--query-size", synth.query_size, "Query height and width")->expected(2);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a detector on a manifest");
  add_run_flags(t, train.o);
  t->add_option("--data", train.data, "Training manifest (JSON lines)")->required();
  t->add_option("--val", train.val, "Validation manifest");
  t->add_option("--out", train.out, "Output directory");
  t->add_option("--checkpoint", train.checkpoint, "Checkpoint path (default <out>/checkpoint.vgck)");
  t->add_option("--resume", train.resume, "Continue from this checkpoint");
  t->add_option("--max-steps", train.max_steps, "Stop after this many steps (overrides --epochs)")
      ->check(CLI::NonNegativeNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a manifest");
  e->add_option("--data", ev.data, "Manifest to evaluate")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint");
  e->add_flag("--oracle", ev.oracle, "Predict the ground truth (plumbing check)");
  e->add_option("--out", ev.out, "Output directory");
  e->add_flag("--overlays", ev.overlays, "Write reference images with predicted (red) and true (green) boxes");

  EncodeArgs enc;
  auto* c = app.add_subcommand("encode", "Render a positional encoding or attention heatmap");
  add_run_flags(c, enc.o);
  c->add_option("--click", enc.click, "Click row and column")->expected(2)->required();
  c->add_option("--size", enc.size, "Query height and width")->expected(2);
  c->add_option("--query", enc.query, "Query image (sets the size; needed for --attn)");
  c->add_option("--out", enc.out, "Output PNG");
  c->add_option("--checkpoint", enc.checkpoint, "Checkpoint for --attn");
  c->add_flag("--npy", enc.npy, "Also write the raw map as .npy with a .json sidecar");
  c->add_flag("--attn", enc.attn, "Export the spatial attention of a trained model");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Encoding ablations: sigma grid and ring-weight table");
  add_run_flags(w, sw.o);
  w->add_option("--data", sw.data, "Training manifest")->required();
  w->add_option("--eval-data", sw.eval_data, "Evaluation manifest (default: training manifest)");
  w->add_option("--param", sw.param, "sigma, ring-weights, both or auto")
      ->check(CLI::IsMember({"sigma", "ring-weights", "both", "auto"}));
  w->add_option("--sigmas", sw.sigmas, "Sigma grid");
  w->add_option("--out", sw.out, "Output directory");
  w->add_option("--max-steps", sw.max_steps, "Training steps per setting (default: full schedule)")
      ->check(CLI::NonNegativeNumber);

  std::string adapt_csv, adapt_out = "manifest.jsonl";
  auto* ad = app.add_subcommand("adapt", "Convert a benchmark annotation table into a manifest");
  ad->add_option("--csv", adapt_csv, "Annotation CSV")->required();
  ad->add_option("--out", adapt_out, "Manifest path");

  std::vector<std::string> argv_store{"vageo"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& arg : argv_store) argv.push_back(arg.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    EventLog log(&std::cout);
    std::ofstream file_sink;
    if (!log_file.empty()) {
      file_sink.open(log_file, std::ios::app);
      if (!file_sink) throw IoError("cannot open log file '" + log_file + "'");
      log.add_sink(&file_sink);
    }
    if (s->parsed()) return cmd_synth(synth, log);
    if (t->parsed()) return cmd_train(train, log);
    if (e->parsed()) return cmd_eval(ev, log);
    if (c->parsed()) return cmd_encode(enc, log);
    if (w->parsed()) return cmd_sweep(sw, log);
    if (ad->parsed()) return cmd_adapt(adapt_csv, adapt_out, log);
    return kUsage;
  } catch (const CLI::Success& ex) {
    app.exit(ex);
    return kSuccess;
  } catch (const CLI::Error& ex) {
    app.exit(ex);
    return kUsage;
  } catch (const ConfigError& ex) {
    std::cerr << "vageo: " << ex.what() << '\n';
    return kUsage;
  } catch (const ValidationError& ex) {
    std::cerr << "vageo: " << ex.what() << '\n';
    return kValidation;
  } catch (const ParseError& ex) {
    std::cerr << "vageo: " << ex.what() << '\n';
    return kValidation;
  } catch (const ShapeError& ex) {
    std::cerr << "vageo: " << ex.what() << '\n';
    return kValidation;
  } catch (const PreconditionError& ex) {
    std::cerr << "vageo: " << ex.what() << '\n';
    return kValidation;
  } catch (const std::exception& ex) {
    std::cerr << "vageo: " << ex.what() << '\n';
    return kRuntime;
  }
}

}  // namespace vageo::cli
