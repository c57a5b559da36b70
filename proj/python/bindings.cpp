#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "vageo/checkpoint.hpp"
#include "vageo/config.hpp"
#include "vageo/csha.hpp"
#include "vageo/error.hpp"
#include "vageo/eval.hpp"
#include "vageo/model.hpp"
#include "vageo/pipeline.hpp"
#include "vageo/synth.hpp"
#include "vageo/train.hpp"
#include "vageo/vspe.hpp"

namespace py = pybind11;
using namespace vageo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Box = std::array<double, 4>;  // cx, cy, w, h

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.storage().begin(), t.storage().end(), out.mutable_data());
  return out;
}

Array map_array(const EncodingMap& m) {
  Array out({m.height, m.width});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

BBox to_bbox(const Box& b) { return {b[0], b[1], b[2], b[3]}; }
Box from_bbox(const BBox& b) { return {b.cx, b.cy, b.w, b.h}; }

std::vector<BBox> to_bboxes(const std::vector<Box>& v) {
  std::vector<BBox> out;
  for (const auto& b : v) out.push_back(to_bbox(b));
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["acc_at_25"] = r.acc_at_25;
  d["acc_at_50"] = r.acc_at_50;
  d["mean_iou"] = r.mean_iou;
  d["n_samples"] = r.n_samples;
  d["ious"] = r.ious;
  return d;
}

RunConfig config_from(const std::string& preset, const std::string& view, const std::string& overrides) {
  RunConfig c = preset_config(preset, query_view_from_string(view));
  if (!overrides.empty()) c = merge_json(c, Json::parse(overrides));
  return c;
}

}  // namespace

PYBIND11_MODULE(_vageo, m) {
  m.doc() = "Click-guided cross-view localization: encodings, attention, metrics and training";

  py::register_exception<Error>(m, "VageoError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "ground_encoding",
      [](int64_t height, int64_t width, int64_t row, int64_t col, double sigma, const std::string& kernel,
         bool normalize) {
        GroundEncodingConfig c;
        c.sigma = sigma;
        c.kernel = ground_kernel_from_string(kernel);
        c.normalize_peak = normalize;
        return map_array(ground_encoding(height, width, {row, col}, c));
      },
      py::arg("height"), py::arg("width"), py::arg("row"), py::arg("col"), py::arg("sigma") = 25.0,
      py::arg("kernel") = "paper-squared", py::arg("normalize") = true);

  m.def(
      "drone_encoding",
      [](int64_t height, int64_t width, int64_t row, int64_t col, std::array<double, 4> weights) {
        DroneEncodingConfig c;
        c.weights = weights;
        return map_array(drone_encoding(height, width, {row, col}, c));
      },
      py::arg("height"), py::arg("width"), py::arg("row"), py::arg("col"),
      py::arg("weights") = std::array<double, 4>{0.60, 0.15, 0.15, 0.10});

  m.attr("RING_WEIGHT_ABLATION") = std::vector<std::array<double, 4>>(kDroneWeightAblation.begin(),
                                                                       kDroneWeightAblation.end());

  m.def(
      "csha_forward",
      [](const Array& x, const Array& w1, const Array& w2, const Array& conv_weight, double conv_bias, double gamma,
         double beta, bool relu, bool train) {
        const Tensor f = to_tensor(x);
        if (f.rank() != 4) throw ShapeError("csha_forward expects a B x C x H x W array");
        const Tensor t1 = to_tensor(w1), t2 = to_tensor(w2), tk = to_tensor(conv_weight);
        if (t1.rank() != 2 || t2.rank() != 2) throw ShapeError("w1 and w2 must be matrices");
        ChannelAttentionParams cp{f.dim(1), f.dim(1) / std::max<int64_t>(t1.dim(1), 1), t1, t2};
        if (t1.dim(0) != f.dim(1) || t2.dim(0) != t1.dim(1) || t2.dim(1) != f.dim(1))
          throw ShapeError("w1 must be C x hidden and w2 hidden x C");
        if (tk.rank() != 4 || tk.dim(0) != 1 || tk.dim(1) != 2 || tk.dim(2) != tk.dim(3))
          throw ShapeError("conv_weight must be 1 x 2 x k x k");
        SpatialAttentionParams sp = SpatialAttentionParams::zeros(tk.dim(2));
        sp.conv_weight = tk;
        sp.conv_bias = Tensor({1}, conv_bias);
        sp.bn.gamma = Tensor({1}, gamma);
        sp.bn.beta = Tensor({1}, beta);
        sp.relu = relu;
        const CshaResult r = csha_forward(f, cp, sp, train ? Mode::train : Mode::eval);
        return py::make_tuple(to_array(r.output()), to_array(r.channel.weights), to_array(r.spatial.weights));
      },
      py::arg("x"), py::arg("w1"), py::arg("w2"), py::arg("conv_weight"), py::arg("conv_bias") = 0.0,
      py::arg("gamma") = 1.0, py::arg("beta") = 0.0, py::arg("relu") = true, py::arg("train") = false,
      "Returns (output, channel weights B x C, spatial weights B x 1 x H x W).");

  m.def(
      "csha_identity",
      [](const Array& x, int64_t kernel) {
        const Tensor f = to_tensor(x);
        if (f.rank() != 4) throw ShapeError("csha_identity expects a B x C x H x W array");
        return to_array(csha_forward(f, ChannelAttentionParams::zeros(f.dim(1)), SpatialAttentionParams::zeros(kernel))
                            .output());
      },
      py::arg("x"), py::arg("kernel") = 7, "Attention with all-zero parameters.");

  m.def(
      "iou", [](const Box& a, const Box& b) { return iou(to_bbox(a), to_bbox(b)); }, py::arg("a"), py::arg("b"),
      "Boxes are (cx, cy, w, h).");
  m.def(
      "accuracy_at",
      [](const std::vector<Box>& preds, const std::vector<Box>& gts, double tau) {
        return accuracy_at(to_bboxes(preds), to_bboxes(gts), tau);
      },
      py::arg("preds"), py::arg("gts"), py::arg("tau"));
  m.def(
      "summarize", [](const std::vector<Box>& preds, const std::vector<Box>& gts) {
        return report_dict(summarize(to_bboxes(preds), to_bboxes(gts)));
      },
      py::arg("preds"), py::arg("gts"));
  m.def(
      "patch_retrieval",
      [](const std::vector<double>& scores, const Box& gt, int64_t rows, int64_t cols, int64_t patch_size, double tau) {
        return patch_retrieval_protocol(scores, PatchGrid{rows, cols, patch_size}, to_bbox(gt), tau);
      },
      py::arg("scores"), py::arg("gt"), py::arg("rows") = 8, py::arg("cols") = 8, py::arg("patch_size") = 128,
      py::arg("tau") = 0.5);

  m.def(
      "encode_box",
      [](const Box& gt, int64_t stride, int64_t rows, int64_t cols, std::pair<double, double> anchors) {
        const GridTarget t = encode_box(to_bbox(gt), stride, rows, cols, {anchors.first, anchors.second});
        py::dict d;
        d["row"] = t.row;
        d["col"] = t.col;
        d["tx"] = t.tx;
        d["ty"] = t.ty;
        d["tw"] = t.tw;
        d["th"] = t.th;
        return d;
      },
      py::arg("gt"), py::arg("stride"), py::arg("rows"), py::arg("cols"), py::arg("anchors"));
  m.def(
      "decode_grid",
      [](const Array& logits, int64_t stride, std::pair<double, double> anchors) {
        const Tensor t = to_tensor(logits);
        if (t.rank() != 4 || t.dim(3) != 5) throw ShapeError("logits must be B x rows x cols x 5");
        const DetectionGrid grid = DetectionGrid::from_logits(t);
        std::vector<std::pair<Box, double>> out;
        for (int64_t b = 0; b < grid.batch(); ++b) {
          const CellPrediction p = predict_box(grid, b, stride, {anchors.first, anchors.second});
          out.emplace_back(from_bbox(p.box), p.confidence);
        }
        return out;
      },
      py::arg("logits"), py::arg("stride"), py::arg("anchors"), "Best box and confidence per batch entry.");

  m.def(
      "lr_schedule",
      [](int64_t epoch, double lr0, int64_t halve_every) {
        TrainConfig c;
        c.lr0 = lr0;
        c.halve_every = halve_every;
        return lr_schedule(epoch, c);
      },
      py::arg("epoch"), py::arg("lr0") = 1e-4, py::arg("halve_every") = 10);

  m.def(
      "synth_generate",
      [](const std::filesystem::path& out_dir, int64_t n, uint64_t seed, const std::string& view,
         std::pair<int64_t, int64_t> reference_size, std::optional<std::pair<int64_t, int64_t>> query_size) {
        SynthConfig c;
        c.n = n;
        c.seed = seed;
        c.view = query_view_from_string(view);
        c.reference = {reference_size.first, reference_size.second};
        c.query = query_size ? ImageDims{query_size->first, query_size->second} : default_query_dims(c.view);
        synth_generate(c, out_dir);
        return out_dir / "manifest.jsonl";
      },
      py::arg("out_dir"), py::arg("n"), py::arg("seed") = 0, py::arg("view") = "drone",
      py::arg("reference_size") = std::pair<int64_t, int64_t>{256, 256}, py::arg("query_size") = py::none(),
      "Writes a synthetic dataset and returns its manifest path.");

  m.def(
      "load_manifest",
      [](const std::filesystem::path& path) {
        py::list out;
        for (const Sample& s : load_manifest(path).samples) {
          py::dict d;
          d["query"] = s.query_path;
          d["reference"] = s.reference_path;
          d["view"] = to_string(s.view);
          d["click"] = std::make_pair(s.click.row, s.click.col);
          d["bbox"] = from_bbox(s.gt_box);
          out.append(d);
        }
        return out;
      },
      py::arg("path"));

  m.def(
      "config",
      [](const std::string& preset, const std::string& view, const std::string& overrides) {
        return to_json(config_from(preset, view, overrides)).dump();
      },
      py::arg("preset") = "toy", py::arg("view") = "drone", py::arg("overrides") = "",
      "Resolved run configuration as a JSON string; `overrides` is a JSON object.");

  m.def(
      "train_evaluate",
      [](const std::filesystem::path& manifest, const std::string& preset, const std::string& overrides,
         int64_t max_steps, std::optional<std::filesystem::path> checkpoint) {
        const DatasetManifest data = load_manifest(manifest);
        if (data.samples.empty()) throw ValidationError("manifest has no samples");
        const RunConfig c = config_from(preset, to_string(data.samples.front().view), overrides);
        TrainedModel tm;
        {
          py::gil_scoped_release release;
          TrainLoopOptions opts;
          opts.max_steps = max_steps;
          tm = train_from_config(c, data, opts);
        }
        if (checkpoint)
          save_checkpoint(*checkpoint, tm.config, *tm.model, tm.optimizer.get(), tm.result.epochs_completed,
                          static_cast<int64_t>(tm.result.steps.size()));
        std::vector<double> losses;
        for (const auto& s : tm.result.steps) losses.push_back(s.loss);
        py::dict d = report_dict(evaluate(model_predictor(*tm.model, tm.config.input, tm.config.encoder), data));
        d["losses"] = losses;
        d["config"] = to_json(tm.config).dump();
        return d;
      },
      py::arg("manifest"), py::arg("preset") = "toy", py::arg("overrides") = "", py::arg("max_steps") = 0,
      py::arg("checkpoint") = py::none(),
      "Trains on a manifest and evaluates on the same samples; returns metrics and per-step losses.");

  m.def(
      "cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Runs the command-line tool in-process and returns its exit code.");
}
