#include "vageo/eval.hpp"

#include <algorithm>
#include <numeric>

#include "vageo/error.hpp"

namespace vageo {

double iou(const BBox& a, const BBox& b) {
  if (a.area() <= 0 || b.area() <= 0) return 0.0;
  const double area_a = (a.x1() - a.x0()) * (a.y1() - a.y0());
  const double area_b = (b.x1() - b.x0()) * (b.y1() - b.y0());
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return std::min(1.0, inter / (area_a + area_b - inter));
}

double accuracy_at(const std::vector<BBox>& preds, const std::vector<BBox>& gts, double tau) {
  if (preds.size() != gts.size()) throw PreconditionError("accuracy_at: prediction and ground-truth counts differ");
  if (preds.empty()) throw PreconditionError("accuracy_at: no samples");
  size_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += iou(preds[i], gts[i]) >= tau ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

BBox PatchGrid::patch_box(int64_t index) const {
  const auto s = static_cast<double>(patch_size);
  const auto r = static_cast<double>(index / cols), c = static_cast<double>(index % cols);
  return BBox::from_corners(c * s, r * s, (c + 1) * s, (r + 1) * s);
}

std::vector<int64_t> top_patches(const std::vector<double>& scores, int64_t k) {
  std::vector<int64_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });
  order.resize(std::min(order.size(), static_cast<size_t>(k)));
  return order;
}

bool patch_retrieval_protocol(const std::vector<double>& scores, const PatchGrid& grid, const BBox& gt, double tau) {
  if (grid.rows < 1 || grid.cols < 1 || grid.patch_size < 1) throw ConfigError("patch grid dimensions must be positive");
  if (static_cast<int64_t>(scores.size()) != grid.rows * grid.cols) throw ShapeError("score count does not match the patch grid");
  if (scores.size() < 5) throw PreconditionError("patch retrieval needs at least 5 patches");
  for (int64_t idx : top_patches(scores, 5))
    if (iou(grid.patch_box(idx), gt) >= tau) return true;
  return false;
}

EvalReport summarize(const std::vector<BBox>& preds, const std::vector<BBox>& gts) {
  EvalReport report;
  report.acc_at_25 = accuracy_at(preds, gts, 0.25);
  report.acc_at_50 = accuracy_at(preds, gts, 0.5);
  report.n_samples = static_cast<int64_t>(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) report.ious.push_back(iou(preds[i], gts[i]));
  report.mean_iou = std::accumulate(report.ious.begin(), report.ious.end(), 0.0) / static_cast<double>(preds.size());
  return report;
}

EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest) {
  if (manifest.samples.empty()) throw PreconditionError("cannot evaluate an empty manifest");
  std::vector<BBox> preds, gts;
  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    preds.push_back(predictor(i, manifest.samples[i]));
    gts.push_back(manifest.samples[i].gt_box);
  }
  return summarize(preds, gts);
}

Predictor model_predictor(GeoLocalizer& model, const InputDims& dims, const EncoderConfig& encoder) {
  return [&model, dims, encoder](size_t, const Sample& sample) {
    const PreparedSample p = prepare_sample(sample, dims, encoder);
    Shape qs{1}, rs{1};
    qs.insert(qs.end(), p.query.shape().begin(), p.query.shape().end());
    rs.insert(rs.end(), p.reference.shape().begin(), p.reference.shape().end());
    const DetectionGrid grid = model.forward(p.query.reshaped(qs), p.reference.reshaped(rs), Mode::eval);
    const CellPrediction best = predict_box(grid, 0, model.stride(), model.config().anchors);
    return rescale_box(best.box, dims.reference, sample.reference_dims);
  };
}

Predictor oracle_predictor() {
  return [](size_t, const Sample& sample) { return sample.gt_box; };
}

}  // namespace vageo
