#include "vageo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "vageo/error.hpp"

namespace vageo {
namespace fs = std::filesystem;

namespace {

Json dims_json(const ImageDims& d) { return Json::array({d.height, d.width}); }

ImageDims dims_from(const Json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(key + " must be [height, width]");
  return {j[0].get<int64_t>(), j[1].get<int64_t>()};
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  encoder.ground.validate();
  encoder.drone.validate();
  train.validate();
  if (csha.reduction < 1) throw ConfigError("csha reduction must be >= 1");
  if (csha.kernel < 1 || csha.kernel % 2 == 0) throw ConfigError("csha kernel must be a positive odd integer");
  if (box_weight < 0) throw ConfigError("box_weight must be non-negative");
  if (anchors.w < 0 || anchors.h < 0) throw ConfigError("anchors must be non-negative");
  if (stage_channels.empty()) throw ConfigError("stage_channels must not be empty");
  for (auto c : stage_channels)
    if (c < 1) throw ConfigError("stage_channels entries must be positive");
  const ModelConfig m = model_config();
  m.query_backbone.check_input(input.query.height, input.query.width);
  m.reference_backbone.check_input(input.reference.height, input.reference.width);
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.query_channels = 4;
  m.query_backbone.preset = query_backbone;
  m.query_backbone.stage_channels = stage_channels;
  m.reference_backbone.preset = reference_backbone;
  m.reference_backbone.stage_channels = stage_channels;
  m.use_csha = use_csha;
  m.csha = csha;
  if (anchors.w > 0 && anchors.h > 0) m.anchors = anchors;
  m.box_weight = box_weight;
  m.seed = seed;
  return m;
}

RunConfig preset_config(const std::string& name, QueryView view) {
  RunConfig c;
  c.preset = name;
  c.view = view;
  c.input.query = view == QueryView::ground ? ImageDims{128, 256} : ImageDims{128, 128};
  if (name == "default") return c;
  if (name == "toy") {
    c.train.lr0 = 1e-3;
    c.train.batch_size = 8;
    c.train.epochs = 30;
    c.train.halve_every = 10;
    return c;
  }
  if (name == "full") {
    c.query_backbone = BackbonePreset::paper_resnet18;
    c.reference_backbone = BackbonePreset::paper_darknet53;
    c.input.query = view == QueryView::ground ? ImageDims{256, 512} : ImageDims{256, 256};
    c.input.reference = {1024, 1024};
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected default, toy or full)");
}

Json to_json(const RunConfig& c) {
  Json j;
  j["preset"] = c.preset;
  j["view"] = to_string(c.view);
  j["seed"] = c.seed;
  j["encoder"] = {{"sigma", c.encoder.ground.sigma},
                  {"kernel", to_string(c.encoder.ground.kernel)},
                  {"normalize_peak", c.encoder.ground.normalize_peak},
                  {"ring_weights", c.encoder.drone.weights}};
  j["csha"] = {{"enabled", c.use_csha},
               {"reduction", c.csha.reduction},
               {"kernel", c.csha.kernel},
               {"relu", c.csha.relu},
               {"channel", c.csha.channel},
               {"spatial", c.csha.spatial}};
  j["backbone"] = {{"query", to_string(c.query_backbone)},
                   {"reference", to_string(c.reference_backbone)},
                   {"stage_channels", c.stage_channels}};
  j["train"] = {{"lr0", c.train.lr0},
                {"halve_every", c.train.halve_every},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs}};
  j["input"] = {{"query", dims_json(c.input.query)}, {"reference", dims_json(c.input.reference)}};
  j["anchors"] = Json::array({c.anchors.w, c.anchors.h});
  j["box_weight"] = c.box_weight;
  j["paths"] = {{"data", c.data}, {"output_dir", c.output_dir}, {"checkpoint", c.checkpoint}};
  return j;
}

RunConfig merge_json(RunConfig c, const Json& j) {
  try {
    check_keys(j, {"preset", "view", "seed", "encoder", "csha", "backbone", "train", "input", "anchors", "box_weight", "paths"},
               "config");
    if (j.contains("preset")) c.preset = j["preset"].get<std::string>();
    if (j.contains("view")) c.view = query_view_from_string(j["view"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("encoder")) {
      const Json& e = j["encoder"];
      check_keys(e, {"sigma", "kernel", "normalize_peak", "ring_weights"}, "encoder");
      if (e.contains("sigma")) c.encoder.ground.sigma = e["sigma"].get<double>();
      if (e.contains("kernel")) c.encoder.ground.kernel = ground_kernel_from_string(e["kernel"].get<std::string>());
      if (e.contains("normalize_peak")) c.encoder.ground.normalize_peak = e["normalize_peak"].get<bool>();
      if (e.contains("ring_weights")) c.encoder.drone.weights = e["ring_weights"].get<std::array<double, 4>>();
    }
    if (j.contains("csha")) {
      const Json& a = j["csha"];
      check_keys(a, {"enabled", "reduction", "kernel", "relu", "channel", "spatial"}, "csha");
      if (a.contains("enabled")) c.use_csha = a["enabled"].get<bool>();
      if (a.contains("reduction")) c.csha.reduction = a["reduction"].get<int64_t>();
      if (a.contains("kernel")) c.csha.kernel = a["kernel"].get<int64_t>();
      if (a.contains("relu")) c.csha.relu = a["relu"].get<bool>();
      if (a.contains("channel")) c.csha.channel = a["channel"].get<bool>();
      if (a.contains("spatial")) c.csha.spatial = a["spatial"].get<bool>();
    }
    if (j.contains("backbone")) {
      const Json& b = j["backbone"];
      check_keys(b, {"query", "reference", "stage_channels"}, "backbone");
      if (b.contains("query")) c.query_backbone = backbone_preset_from_string(b["query"].get<std::string>());
      if (b.contains("reference")) c.reference_backbone = backbone_preset_from_string(b["reference"].get<std::string>());
      if (b.contains("stage_channels")) c.stage_channels = b["stage_channels"].get<std::vector<int64_t>>();
    }
    if (j.contains("train")) {
      const Json& t = j["train"];
      check_keys(t, {"lr0", "halve_every", "batch_size", "epochs"}, "train");
      if (t.contains("lr0")) c.train.lr0 = t["lr0"].get<double>();
      if (t.contains("halve_every")) c.train.halve_every = t["halve_every"].get<int64_t>();
      if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<int64_t>();
      if (t.contains("epochs")) c.train.epochs = t["epochs"].get<int64_t>();
    }
    if (j.contains("input")) {
      const Json& in = j["input"];
      check_keys(in, {"query", "reference"}, "input");
      if (in.contains("query")) c.input.query = dims_from(in["query"], "input.query");
      if (in.contains("reference")) c.input.reference = dims_from(in["reference"], "input.reference");
    }
    if (j.contains("anchors")) {
      const auto a = j["anchors"].get<std::array<double, 2>>();
      c.anchors = {a[0], a[1]};
    }
    if (j.contains("box_weight")) c.box_weight = j["box_weight"].get<double>();
    if (j.contains("paths")) {
      const Json& p = j["paths"];
      check_keys(p, {"data", "output_dir", "checkpoint"}, "paths");
      if (p.contains("data")) c.data = p["data"].get<std::string>();
      if (p.contains("output_dir")) c.output_dir = p["output_dir"].get<std::string>();
      if (p.contains("checkpoint")) c.checkpoint = p["checkpoint"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config '") + path.string() + "': " + e.what(), 0);
  }
  return merge_json(base, j);
}

fs::path output_root() {
  const char* env = std::getenv("VAGEO_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::current_path();
}

}  // namespace vageo
