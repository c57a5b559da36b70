#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vageo/bbox.hpp"
#include "vageo/data.hpp"
#include "vageo/model.hpp"

namespace vageo {

// Intersection over union; 0 when either box has zero area.
double iou(const BBox& a, const BBox& b);

// Fraction of pairs with iou >= tau.
double accuracy_at(const std::vector<BBox>& preds, const std::vector<BBox>& gts, double tau);

struct PatchGrid {
  int64_t rows = 8;
  int64_t cols = 8;
  int64_t patch_size = 128;

  BBox patch_box(int64_t index) const;
};

// Indices of the k highest scores; equal scores keep row-major order.
std::vector<int64_t> top_patches(const std::vector<double>& scores, int64_t k);

// Hit iff one of the five best-scoring patches overlaps `gt` with iou >= tau.
// Throws PreconditionError for grids with fewer than five patches.
bool patch_retrieval_protocol(const std::vector<double>& scores, const PatchGrid& grid, const BBox& gt, double tau);

struct EvalReport {
  double acc_at_25 = 0.0;
  double acc_at_50 = 0.0;
  double mean_iou = 0.0;
  int64_t n_samples = 0;
  std::vector<double> ious;  // per sample, manifest order
};

EvalReport summarize(const std::vector<BBox>& preds, const std::vector<BBox>& gts);

// Predicted box for sample `index`, in the sample's reference-image pixels.
using Predictor = std::function<BBox(size_t index, const Sample& sample)>;

// Throws PreconditionError on an empty manifest.
EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest);

// Runs the detector in eval mode and maps its boxes back to reference pixels.
Predictor model_predictor(GeoLocalizer& model, const InputDims& dims, const EncoderConfig& encoder);

// Returns each sample's ground truth; useful as an upper bound and for plumbing checks.
Predictor oracle_predictor();

}  // namespace vageo
