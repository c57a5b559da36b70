#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "vageo/bbox.hpp"
#include "vageo/model.hpp"
#include "vageo/train.hpp"
#include "vageo/vspe.hpp"

namespace vageo {

enum class Split { train, validation, test };

std::string to_string(Split split);

struct ImageDims {
  int64_t height = 0;
  int64_t width = 0;

  bool operator==(const ImageDims&) const = default;
};

// Image sizes of the public benchmark: 1024x1024 satellite, 256x512 ground
// panoramas, 256x256 drone photos.
struct ExpectedDims {
  ImageDims satellite{1024, 1024};
  ImageDims ground{256, 512};
  ImageDims drone{256, 256};
};

struct Sample {
  std::filesystem::path query_path;  // absolute once loaded
  std::filesystem::path reference_path;
  QueryView view = QueryView::ground;
  ClickPoint click;
  BBox gt_box;
  ImageDims query_dims;  // read from the image headers
  ImageDims reference_dims;
};

struct DatasetManifest {
  std::vector<Sample> samples;
  Split split = Split::train;
  ExpectedDims expected;
  std::filesystem::path root;  // directory relative paths were resolved against

  // True when every image has the benchmark's published size for its role.
  bool matches_expected_dims() const;
};

// One JSON object per line:
//   {"query": "...", "reference": "...", "view": "ground"|"drone",
//    "click": [row, col], "bbox": [cx, cy, w, h]}
// Relative paths resolve against the manifest's directory. Blank lines are
// ignored. Malformed records raise ParseError (with the line number); records
// that break a bound raise ValidationError.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes paths relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Validates click/box bounds and (query, reference) uniqueness.
void validate_manifest(const DatasetManifest& manifest);

// Deterministic shuffle + partition by fractions (train, validation, test).
std::tuple<DatasetManifest, DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                                            std::array<double, 3> fractions,
                                                                            uint64_t seed);

// Converts a benchmark annotation table (CSV with header
// query,reference,view,click_x,click_y,x0,y0,x1,y1) into a manifest.
DatasetManifest convert_annotation_csv(const std::filesystem::path& csv_path);

ClickPoint rescale_click(const ClickPoint& click, ImageDims from, ImageDims to);
BBox rescale_box(const BBox& box, ImageDims from, ImageDims to);

struct EncoderConfig {
  GroundEncodingConfig ground;
  DroneEncodingConfig drone;
};

EncodingMap encode_query(QueryView view, ImageDims dims, const ClickPoint& click, const EncoderConfig& config);

struct InputDims {
  ImageDims query{128, 256};
  ImageDims reference{256, 256};
};

// A sample resized to the model's input size with the encoding attached.
struct PreparedSample {
  Tensor query;      // (3+1) x H x W
  Tensor reference;  // 3 x Hr x Wr
  ClickPoint click;  // in resized query pixels
  BBox gt;           // in resized reference pixels
};

PreparedSample prepare_sample(const Sample& sample, const InputDims& dims, const EncoderConfig& encoder);
std::vector<PreparedSample> prepare_samples(const DatasetManifest& manifest, const InputDims& dims,
                                            const EncoderConfig& encoder);

Batch make_batch(const std::vector<PreparedSample>& samples, std::span<const size_t> indices);

// Mean ground-truth width/height, used as the detection anchor.
Anchors mean_box_size(std::span<const PreparedSample> samples);

}  // namespace vageo
