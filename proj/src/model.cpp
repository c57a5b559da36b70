#include "vageo/model.hpp"

#include <cmath>
#include <limits>

#include "vageo/error.hpp"

namespace vageo {
namespace {

// B x 5 x R x C  <->  B x R x C x 5
Tensor channels_last(const Tensor& t) {
  const int64_t batch = t.dim(0), k = t.dim(1), rows = t.dim(2), cols = t.dim(3);
  Tensor out({batch, rows, cols, k});
  for (int64_t b = 0; b < batch; ++b)
    for (int64_t c = 0; c < k; ++c)
      for (int64_t i = 0; i < rows * cols; ++i) out[(b * rows * cols + i) * k + c] = t[(b * k + c) * rows * cols + i];
  return out;
}

Tensor channels_first(const Tensor& t) {
  const int64_t batch = t.dim(0), rows = t.dim(1), cols = t.dim(2), k = t.dim(3);
  Tensor out({batch, k, rows, cols});
  for (int64_t b = 0; b < batch; ++b)
    for (int64_t c = 0; c < k; ++c)
      for (int64_t i = 0; i < rows * cols; ++i) out[(b * k + c) * rows * cols + i] = t[(b * rows * cols + i) * k + c];
  return out;
}

bool is_activated(int64_t k) { return k == 0 || k == 1 || k == 4; }

}  // namespace

DetectionGrid DetectionGrid::from_logits(Tensor logits) {
  if (logits.rank() != 4 || logits.dim(3) != 5) throw ShapeError("detection grid must be B x rows x cols x 5");
  DetectionGrid g;
  g.values = Tensor(logits.shape());
  for (size_t i = 0; i < logits.size(); ++i) {
    g.values[i] = is_activated(static_cast<int64_t>(i % 5)) ? ops::sigmoid(logits[i]) : logits[i];
  }
  g.logits = std::move(logits);
  return g;
}

DetectionGrid DetectionGrid::from_values(Tensor values) {
  if (values.rank() != 4 || values.dim(3) != 5) throw ShapeError("detection grid must be B x rows x cols x 5");
  DetectionGrid g;
  g.logits = Tensor(values.shape());
  for (size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (is_activated(static_cast<int64_t>(i % 5))) {
      if (!(v > 0.0 && v < 1.0)) throw ValidationError("activated grid entries must lie in (0, 1)");
      g.logits[i] = std::log(v) - std::log1p(-v);
    } else {
      g.logits[i] = v;
    }
  }
  g.values = std::move(values);
  return g;
}

GridTarget encode_box(const BBox& gt, int64_t stride, int64_t rows, int64_t cols, const Anchors& anchors) {
  const double width = static_cast<double>(cols * stride), height = static_cast<double>(rows * stride);
  if (!(gt.cx >= 0 && gt.cx < width && gt.cy >= 0 && gt.cy < height)) {
    throw ValidationError("ground-truth centre lies outside the " + std::to_string(rows * stride) + "x" +
                          std::to_string(cols * stride) + " reference image");
  }
  if (!(gt.w > 0 && gt.h > 0)) throw ValidationError("ground-truth box must have positive size");
  GridTarget t;
  const double gx = gt.cx / static_cast<double>(stride), gy = gt.cy / static_cast<double>(stride);
  t.col = std::min<int64_t>(static_cast<int64_t>(std::floor(gx)), cols - 1);
  t.row = std::min<int64_t>(static_cast<int64_t>(std::floor(gy)), rows - 1);
  t.tx = gx - static_cast<double>(t.col);
  t.ty = gy - static_cast<double>(t.row);
  t.tw = std::log(gt.w / anchors.w);
  t.th = std::log(gt.h / anchors.h);
  return t;
}

std::vector<CellPrediction> decode_boxes(const DetectionGrid& grid, int64_t b, int64_t stride, const Anchors& anchors) {
  std::vector<CellPrediction> out;
  out.reserve(static_cast<size_t>(grid.rows() * grid.cols()));
  const double s = static_cast<double>(stride);
  for (int64_t i = 0; i < grid.rows(); ++i) {
    for (int64_t j = 0; j < grid.cols(); ++j) {
      CellPrediction p;
      p.row = i;
      p.col = j;
      p.box.cx = (static_cast<double>(j) + grid.at(b, i, j, 0)) * s;
      p.box.cy = (static_cast<double>(i) + grid.at(b, i, j, 1)) * s;
      p.box.w = anchors.w * std::exp(grid.at(b, i, j, 2));
      p.box.h = anchors.h * std::exp(grid.at(b, i, j, 3));
      p.confidence = grid.at(b, i, j, 4);
      out.push_back(p);
    }
  }
  return out;
}

CellPrediction predict_box(const DetectionGrid& grid, int64_t b, int64_t stride, const Anchors& anchors) {
  if (b < 0 || b >= grid.batch()) throw PreconditionError("batch index out of range");
  int64_t best_row = 0, best_col = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < grid.rows(); ++i) {
    for (int64_t j = 0; j < grid.cols(); ++j) {
      // Compare logits so saturated sigmoids still rank correctly.
      const double z = grid.logits[static_cast<size_t>(((b * grid.rows() + i) * grid.cols() + j) * 5 + 4)];
      if (z > best) {
        best = z;
        best_row = i;
        best_col = j;
      }
    }
  }
  const double s = static_cast<double>(stride);
  CellPrediction p;
  p.row = best_row;
  p.col = best_col;
  p.box.cx = (static_cast<double>(best_col) + grid.at(b, best_row, best_col, 0)) * s;
  p.box.cy = (static_cast<double>(best_row) + grid.at(b, best_row, best_col, 1)) * s;
  p.box.w = anchors.w * std::exp(grid.at(b, best_row, best_col, 2));
  p.box.h = anchors.h * std::exp(grid.at(b, best_row, best_col, 3));
  p.confidence = grid.at(b, best_row, best_col, 4);
  return p;
}

LossResult detection_loss(const DetectionGrid& grid, const std::vector<BBox>& gts, int64_t stride,
                          const Anchors& anchors, double box_weight) {
  const int64_t batch = grid.batch(), rows = grid.rows(), cols = grid.cols();
  if (static_cast<int64_t>(gts.size()) != batch) throw ShapeError("detection_loss: one ground-truth box per sample");
  const double cells = static_cast<double>(rows * cols);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  LossResult r;
  r.grad_logits = Tensor(grid.logits.shape());
  for (int64_t b = 0; b < batch; ++b) {
    const GridTarget t = encode_box(gts[static_cast<size_t>(b)], stride, rows, cols, anchors);
    for (int64_t i = 0; i < rows; ++i) {
      for (int64_t j = 0; j < cols; ++j) {
        const auto base = static_cast<size_t>(((b * rows + i) * cols + j) * 5);
        const double z = grid.logits[base + 4];
        if (i == t.row && j == t.col) {
          r.objectness += ops::softplus(-z) * inv_batch;
          r.grad_logits[base + 4] = (ops::sigmoid(z) - 1.0) * inv_batch;
        } else {
          r.objectness += ops::softplus(z) / cells * inv_batch;
          r.grad_logits[base + 4] = ops::sigmoid(z) / cells * inv_batch;
        }
      }
    }
    const auto base = static_cast<size_t>(((b * rows + t.row) * cols + t.col) * 5);
    const double targets[4] = {t.tx, t.ty, t.tw, t.th};
    for (size_t k = 0; k < 4; ++k) {
      const double pred = grid.values[base + k];
      const double diff = pred - targets[k];
      r.box += diff * diff * inv_batch;
      const double dpred = 2.0 * diff * box_weight * inv_batch;
      r.grad_logits[base + k] = k < 2 ? dpred * pred * (1.0 - pred) : dpred;
    }
  }
  r.value = r.objectness + box_weight * r.box;
  return r;
}

GeoLocalizer::GeoLocalizer(const ModelConfig& config) : config_(config) {
  std::mt19937_64 rng(config.seed);
  query_backbone_ = build_backbone(config.query_backbone, config.query_channels, rng);
  const int64_t cq = config.query_backbone.output_channels();
  if (config.use_csha) csha_ = std::make_unique<CshaBlock>(cq, config.csha, rng);
  reference_backbone_ = build_backbone(config.reference_backbone, 3, rng);
  const int64_t cr = config.reference_backbone.output_channels();
  fusion_ = std::make_unique<Sequential>();
  fusion_->emplace<Conv2d>(cr + cq, cr, 1, 1, 0, true, rng);
  fusion_->emplace<Activate>(Activation::relu);
  fusion_->emplace<Conv2d>(cr, cr, 3, 1, 1, true, rng);
  fusion_->emplace<Activate>(Activation::relu);
  head_ = std::make_unique<Conv2d>(cr, 5, 1, 1, 0, true, rng);
  head_->weight().value *= 0.1;

  query_backbone_->register_params(registry_, "query.backbone.");
  if (csha_) csha_->register_params(registry_, "query.csha.");
  reference_backbone_->register_params(registry_, "reference.backbone.");
  fusion_->register_params(registry_, "fusion.");
  head_->register_params(registry_, "head.");
}

Tensor GeoLocalizer::query_branch(const Tensor& query, Mode mode) {
  if (query.rank() != 4 || query.dim(1) != config_.query_channels) {
    throw ShapeError("query branch expects B x " + std::to_string(config_.query_channels) + " x H x W, got " +
                     shape_string(query.shape()));
  }
  config_.query_backbone.check_input(query.dim(2), query.dim(3));
  Tensor f = query_backbone_->forward(query, mode);
  if (csha_) f = csha_->forward(f, mode);
  query_feature_shape_ = f.shape();
  return ops::global_avg_pool(f);
}

Tensor GeoLocalizer::reference_branch(const Tensor& reference, Mode mode) {
  if (reference.rank() != 4 || reference.dim(1) != 3) {
    throw ShapeError("reference branch expects B x 3 x H x W, got " + shape_string(reference.shape()));
  }
  config_.reference_backbone.check_input(reference.dim(2), reference.dim(3));
  return reference_backbone_->forward(reference, mode);
}

Tensor GeoLocalizer::fuse(const Tensor& descriptor, const Tensor& r, Mode mode) {
  if (descriptor.rank() != 2 || r.rank() != 4 || descriptor.dim(0) != r.dim(0)) {
    throw ShapeError("fuse: batch mismatch between descriptor " + shape_string(descriptor.shape()) +
                     " and reference features " + shape_string(r.shape()));
  }
  const int64_t batch = r.dim(0), cq = descriptor.dim(1), plane = r.dim(2) * r.dim(3);
  Tensor qmap({batch, cq, r.dim(2), r.dim(3)});
  for (int64_t p = 0; p < batch * cq; ++p) std::fill_n(qmap.data() + p * plane, plane, descriptor[static_cast<size_t>(p)]);
  reference_feature_channels_ = r.dim(1);
  return fusion_->forward(concat_channels(r, qmap), mode);
}

DetectionGrid GeoLocalizer::detect_head(const Tensor& fused, Mode mode) {
  return DetectionGrid::from_logits(channels_last(head_->forward(fused, mode)));
}

DetectionGrid GeoLocalizer::forward(const Tensor& query, const Tensor& reference, Mode mode) {
  if (query.rank() == 4 && reference.rank() == 4 && query.dim(0) != reference.dim(0)) {
    throw ShapeError("query and reference batches differ");
  }
  const Tensor q = query_branch(query, mode);
  const Tensor r = reference_branch(reference, mode);
  return detect_head(fuse(q, r, mode), mode);
}

void GeoLocalizer::backward(const Tensor& grad_logits) {
  const Tensor grad_fused = head_->backward(channels_first(grad_logits));
  const Tensor grad_cat = fusion_->backward(grad_fused);
  auto [grad_r, grad_qmap] = split_channels(grad_cat, reference_feature_channels_);
  reference_backbone_->backward(grad_r);

  const int64_t batch = grad_qmap.dim(0), cq = grad_qmap.dim(1), plane = grad_qmap.dim(2) * grad_qmap.dim(3);
  Tensor grad_desc({batch, cq});
  for (int64_t p = 0; p < batch * cq; ++p) {
    double s = 0.0;
    for (int64_t i = 0; i < plane; ++i) s += grad_qmap[static_cast<size_t>(p * plane + i)];
    grad_desc[static_cast<size_t>(p)] = s;
  }
  Tensor g = ops::global_avg_pool_backward(query_feature_shape_, grad_desc);
  if (csha_) g = csha_->backward(g);
  query_backbone_->backward(g);
}

void GeoLocalizer::zero_grad() {
  for (auto& p : registry_.params) p.param->grad.fill(0.0);
}

size_t GeoLocalizer::parameter_count() const {
  size_t n = 0;
  for (const auto& p : registry_.params) n += p.param->value.size();
  return n;
}

const Tensor& GeoLocalizer::last_attention() const {
  static const Tensor empty;
  return csha_ ? csha_->last_spatial_weights() : empty;
}

}  // namespace vageo
