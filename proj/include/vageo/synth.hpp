#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vageo/bbox.hpp"
#include "vageo/data.hpp"
#include "vageo/image.hpp"
#include "vageo/vspe.hpp"

// Procedural cross-view scenes: coloured polygons on a textured ground plane,
// rendered top-down as the reference and through a warped camera as the query.
namespace vageo {

struct SynthConfig {
  int64_t n = 8;
  uint64_t seed = 0;
  QueryView view = QueryView::drone;
  ImageDims reference{256, 256};
  ImageDims query{128, 128};

  void validate() const;
};

// Query size used when none is given: 128x256 for ground, 128x128 for drone.
ImageDims default_query_dims(QueryView view);

struct Scene {
  Image query;
  Image reference;
  std::vector<uint8_t> query_mask;  // 1 where the target polygon is visible
  std::vector<uint8_t> reference_mask;
  ClickPoint click;
  BBox gt;
};

// Scene `index` of the stream identified by `seed`; a pure function of its arguments.
Scene generate_scene(uint64_t seed, int64_t index, QueryView view, ImageDims reference, ImageDims query);

// Tight half-open box around the set pixels of a mask. Throws on an empty mask.
BBox mask_box(const std::vector<uint8_t>& mask, int64_t height, int64_t width);

// Writes images/<index>_query.png, images/<index>_reference.png and
// manifest.jsonl under `out_dir` and returns the manifest.
DatasetManifest synth_generate(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace vageo
