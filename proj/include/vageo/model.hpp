#pragma once

#include <memory>
#include <random>
#include <vector>

#include "vageo/backbone.hpp"
#include "vageo/bbox.hpp"
#include "vageo/csha.hpp"
#include "vageo/layers.hpp"
#include "vageo/vspe.hpp"

namespace vageo {

struct Anchors {
  double w = 32.0;
  double h = 32.0;
};

struct ModelConfig {
  int64_t query_channels = 4;  // RGB + positional encoding
  BackboneConfig query_backbone;
  BackboneConfig reference_backbone;
  bool use_csha = true;
  CshaOptions csha;
  Anchors anchors;
  double box_weight = 5.0;
  uint64_t seed = 0;
};

// B x rows x cols x 5 per-cell predictions (tx, ty, tw, th, obj). `logits`
// holds the raw head outputs; `values` applies sigmoid to tx, ty and obj.
struct DetectionGrid {
  Tensor logits;
  Tensor values;

  int64_t batch() const { return values.dim(0); }
  int64_t rows() const { return values.dim(1); }
  int64_t cols() const { return values.dim(2); }
  double at(int64_t b, int64_t row, int64_t col, int64_t k) const {
    return values[static_cast<size_t>(((b * rows() + row) * cols() + col) * 5 + k)];
  }

  static DetectionGrid from_logits(Tensor logits);
  // Builds a grid directly from activated values (tx, ty, obj in (0,1)).
  static DetectionGrid from_values(Tensor values);
};

// Activated head targets for one ground-truth box.
struct GridTarget {
  int64_t row = 0;
  int64_t col = 0;
  double tx = 0.0, ty = 0.0, tw = 0.0, th = 0.0;
};

// Throws ValidationError when the box centre falls outside the
// rows*stride x cols*stride image.
GridTarget encode_box(const BBox& gt, int64_t stride, int64_t rows, int64_t cols, const Anchors& anchors);

struct CellPrediction {
  BBox box;
  double confidence = 0.0;
  int64_t row = 0;
  int64_t col = 0;
};

std::vector<CellPrediction> decode_boxes(const DetectionGrid& grid, int64_t batch_index, int64_t stride,
                                         const Anchors& anchors);

// Box of the cell with the highest objectness (first in row-major order on ties).
CellPrediction predict_box(const DetectionGrid& grid, int64_t batch_index, int64_t stride, const Anchors& anchors);

struct LossResult {
  double value = 0.0;
  double objectness = 0.0;
  double box = 0.0;
  Tensor grad_logits;  // same layout as DetectionGrid::logits
};

// Per sample: -log(obj_pos) + sum_neg -log(1 - obj) / cells + box_weight *
// squared error of (tx, ty, tw, th) at the positive cell; averaged over the batch.
LossResult detection_loss(const DetectionGrid& grid, const std::vector<BBox>& gts, int64_t stride,
                          const Anchors& anchors, double box_weight = 5.0);

// Two-branch detector: query branch (backbone -> CSHA -> global pool),
// reference branch (backbone), broadcast-concat fusion and a 1x1 grid head.
class GeoLocalizer {
 public:
  explicit GeoLocalizer(const ModelConfig& config);

  GeoLocalizer(const GeoLocalizer&) = delete;
  GeoLocalizer& operator=(const GeoLocalizer&) = delete;

  const ModelConfig& config() const { return config_; }
  int64_t stride() const { return config_.reference_backbone.output_stride(); }
  int64_t descriptor_length() const { return config_.query_backbone.output_channels(); }
  int64_t reference_channels() const { return config_.reference_backbone.output_channels(); }

  // B x (C+1) x H x W -> B x C_q
  Tensor query_branch(const Tensor& query, Mode mode);
  // B x 3 x Hr x Wr -> B x C_r x Hr/stride x Wr/stride
  Tensor reference_branch(const Tensor& reference, Mode mode);
  Tensor fuse(const Tensor& descriptor, const Tensor& reference_features, Mode mode);
  DetectionGrid detect_head(const Tensor& fused, Mode mode);

  DetectionGrid forward(const Tensor& query, const Tensor& reference, Mode mode);
  // Back-propagates dL/dlogits through the most recent forward().
  void backward(const Tensor& grad_logits);

  ParamRegistry& registry() { return registry_; }
  void zero_grad();
  size_t parameter_count() const;

  // Spatial attention weights (B x 1 x h x w) of the most recent query pass.
  const Tensor& last_attention() const;
  CshaBlock* csha() { return csha_.get(); }
  Sequential& fusion() { return *fusion_; }
  Conv2d& head() { return *head_; }

 private:
  ModelConfig config_;
  std::unique_ptr<Sequential> query_backbone_;
  std::unique_ptr<CshaBlock> csha_;
  std::unique_ptr<Sequential> reference_backbone_;
  std::unique_ptr<Sequential> fusion_;
  std::unique_ptr<Conv2d> head_;
  ParamRegistry registry_;
  Shape query_feature_shape_;
  int64_t reference_feature_channels_ = 0;
};

}  // namespace vageo
