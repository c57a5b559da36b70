#include "vageo/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vageo/error.hpp"
#include "vageo/image.hpp"

namespace vageo {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string where(int line) { return "line " + std::to_string(line) + ": "; }

fs::path resolve(const fs::path& root, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (root / path).lexically_normal();
}

std::string portable(const fs::path& path, const fs::path& root) {
  if (!root.empty()) {
    const fs::path rel = path.lexically_relative(root);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  }
  return path.generic_string();
}

void validate_sample(const Sample& s, const std::string& context) {
  if (s.click.row < 0 || s.click.row >= s.query_dims.height || s.click.col < 0 || s.click.col >= s.query_dims.width) {
    throw ValidationError(context + "click (" + std::to_string(s.click.row) + ", " + std::to_string(s.click.col) +
                          ") outside " + std::to_string(s.query_dims.height) + "x" +
                          std::to_string(s.query_dims.width) + " query image");
  }
  constexpr double tol = 1e-6;
  const BBox& b = s.gt_box;
  if (!(b.w > 0 && b.h > 0) || !std::isfinite(b.cx) || !std::isfinite(b.cy) || b.x0() < -tol || b.y0() < -tol ||
      b.x1() > static_cast<double>(s.reference_dims.width) + tol ||
      b.y1() > static_cast<double>(s.reference_dims.height) + tol) {
    throw ValidationError(context + "bbox outside " + std::to_string(s.reference_dims.height) + "x" +
                          std::to_string(s.reference_dims.width) + " reference image");
  }
}

ImageDims image_dims(const fs::path& path, const std::string& context) {
  if (!fs::exists(path)) throw ValidationError(context + "image '" + path.string() + "' does not exist");
  const auto [h, w] = png_size(path);
  return {h, w};
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "unknown";
}

bool DatasetManifest::matches_expected_dims() const {
  for (const auto& s : samples) {
    if (s.reference_dims != expected.satellite) return false;
    if (s.query_dims != (s.view == QueryView::ground ? expected.ground : expected.drone)) return false;
  }
  return true;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  DatasetManifest m;
  m.root = fs::absolute(path).parent_path();
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Sample s;
    try {
      const auto rec = nlohmann::json::parse(text);
      if (!rec.is_object()) throw ParseError("record is not a JSON object", line);
      const auto& click = rec.at("click");
      const auto& bbox = rec.at("bbox");
      if (!click.is_array() || click.size() != 2 || !bbox.is_array() || bbox.size() != 4) {
        throw ParseError("click must be [row, col] and bbox [cx, cy, w, h]", line);
      }
      for (const auto& v : click)
        if (!v.is_number_integer()) throw ParseError("click coordinates must be integers", line);
      for (const auto& v : bbox)
        if (!v.is_number()) throw ParseError("bbox entries must be numbers", line);
      s.query_path = resolve(m.root, rec.at("query").get<std::string>());
      s.reference_path = resolve(m.root, rec.at("reference").get<std::string>());
      s.view = query_view_from_string(rec.at("view").get<std::string>());
      s.click = {click[0].get<int64_t>(), click[1].get<int64_t>()};
      s.gt_box = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(), bbox[3].get<double>()};
    } catch (const ParseError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line);
    }
    s.query_dims = image_dims(s.query_path, where(line));
    s.reference_dims = image_dims(s.reference_path, where(line));
    validate_sample(s, where(line));
    m.samples.push_back(std::move(s));
  }
  validate_manifest(m);
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  const fs::path root = fs::absolute(path).parent_path();
  for (const auto& s : manifest.samples) {
    ordered_json rec;
    rec["query"] = portable(s.query_path, root);
    rec["reference"] = portable(s.reference_path, root);
    rec["view"] = to_string(s.view);
    rec["click"] = {s.click.row, s.click.col};
    rec["bbox"] = {s.gt_box.cx, s.gt_box.cy, s.gt_box.w, s.gt_box.h};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::pair<std::string, std::string>> seen;
  for (size_t i = 0; i < manifest.samples.size(); ++i) {
    const Sample& s = manifest.samples[i];
    const std::string context = "sample " + std::to_string(i) + ": ";
    validate_sample(s, context);
    if (!seen.emplace(s.query_path.string(), s.reference_path.string()).second) {
      throw ValidationError(context + "duplicate (query, reference) pair " + s.query_path.string());
    }
  }
}

std::tuple<DatasetManifest, DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                                            std::array<double, 3> fractions,
                                                                            uint64_t seed) {
  for (double f : fractions)
    if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const size_t n = manifest.samples.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n_train = static_cast<size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<size_t>(std::llround(fractions[1] * static_cast<double>(n))));
  DatasetManifest parts[3];
  const Split names[3] = {Split::train, Split::validation, Split::test};
  for (int k = 0; k < 3; ++k) {
    parts[k].split = names[k];
    parts[k].expected = manifest.expected;
    parts[k].root = manifest.root;
  }
  for (size_t i = 0; i < n; ++i) {
    const int k = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    parts[k].samples.push_back(manifest.samples[order[i]]);
  }
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

DatasetManifest convert_annotation_csv(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open '" + csv_path.string() + "'");
  DatasetManifest m;
  m.root = fs::absolute(csv_path).parent_path();
  std::string text;
  int line = 0;
  std::map<std::string, size_t> columns;
  const char* required[] = {"query", "reference", "view", "click_x", "click_y", "x0", "y0", "x1", "y1"};
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream row(text);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (columns.empty()) {
      for (size_t i = 0; i < cells.size(); ++i) columns[cells[i]] = i;
      for (const char* name : required)
        if (!columns.count(name)) throw ParseError(std::string("missing column '") + name + "'", line);
      continue;
    }
    auto get = [&](const char* name) -> const std::string& {
      const size_t i = columns.at(name);
      if (i >= cells.size()) throw ParseError(std::string("missing value for '") + name + "'", line);
      return cells[i];
    };
    Sample s;
    try {
      s.query_path = resolve(m.root, get("query"));
      s.reference_path = resolve(m.root, get("reference"));
      s.view = query_view_from_string(get("view"));
      s.click = {std::stoll(get("click_y")), std::stoll(get("click_x"))};
      s.gt_box = BBox::from_corners(std::stod(get("x0")), std::stod(get("y0")), std::stod(get("x1")), std::stod(get("y1")));
    } catch (const std::invalid_argument&) {
      throw ParseError("non-numeric field", line);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line);
    }
    s.query_dims = image_dims(s.query_path, where(line));
    s.reference_dims = image_dims(s.reference_path, where(line));
    validate_sample(s, where(line));
    m.samples.push_back(std::move(s));
  }
  validate_manifest(m);
  return m;
}

ClickPoint rescale_click(const ClickPoint& click, ImageDims from, ImageDims to) {
  auto scale = [](int64_t v, int64_t a, int64_t b) {
    const auto r = static_cast<int64_t>(std::floor((static_cast<double>(v) + 0.5) * static_cast<double>(b) / static_cast<double>(a)));
    return std::clamp<int64_t>(r, 0, b - 1);
  };
  return {scale(click.row, from.height, to.height), scale(click.col, from.width, to.width)};
}

BBox rescale_box(const BBox& box, ImageDims from, ImageDims to) {
  const double sx = static_cast<double>(to.width) / static_cast<double>(from.width);
  const double sy = static_cast<double>(to.height) / static_cast<double>(from.height);
  return {box.cx * sx, box.cy * sy, box.w * sx, box.h * sy};
}

EncodingMap encode_query(QueryView view, ImageDims dims, const ClickPoint& click, const EncoderConfig& config) {
  return view == QueryView::ground ? ground_encoding(dims.height, dims.width, click, config.ground)
                                   : drone_encoding(dims.height, dims.width, click, config.drone);
}

PreparedSample prepare_sample(const Sample& sample, const InputDims& dims, const EncoderConfig& encoder) {
  PreparedSample p;
  const Image query = read_png(sample.query_path);
  const Image reference = read_png(sample.reference_path);
  const ImageDims qd{query.height, query.width}, rd{reference.height, reference.width};
  p.click = rescale_click(sample.click, qd, dims.query);
  p.gt = rescale_box(sample.gt_box, rd, dims.reference);
  const Tensor q = resize_bilinear(image_to_tensor(query), dims.query.height, dims.query.width);
  p.query = attach_encoding(q, encode_query(sample.view, dims.query, p.click, encoder));
  p.reference = resize_bilinear(image_to_tensor(reference), dims.reference.height, dims.reference.width);
  return p;
}

std::vector<PreparedSample> prepare_samples(const DatasetManifest& manifest, const InputDims& dims,
                                            const EncoderConfig& encoder) {
  std::vector<PreparedSample> out;
  out.reserve(manifest.samples.size());
  for (const auto& s : manifest.samples) out.push_back(prepare_sample(s, dims, encoder));
  return out;
}

Batch make_batch(const std::vector<PreparedSample>& samples, std::span<const size_t> indices) {
  if (indices.empty()) throw PreconditionError("cannot build an empty batch");
  const PreparedSample& first = samples.at(indices[0]);
  const auto b = static_cast<int64_t>(indices.size());
  Batch batch;
  Shape qs{b};
  qs.insert(qs.end(), first.query.shape().begin(), first.query.shape().end());
  Shape rs{b};
  rs.insert(rs.end(), first.reference.shape().begin(), first.reference.shape().end());
  batch.queries = Tensor(qs);
  batch.references = Tensor(rs);
  for (size_t i = 0; i < indices.size(); ++i) {
    const PreparedSample& s = samples.at(indices[i]);
    if (s.query.shape() != first.query.shape() || s.reference.shape() != first.reference.shape()) {
      throw ShapeError("batch samples must share input sizes");
    }
    std::copy(s.query.storage().begin(), s.query.storage().end(),
              batch.queries.storage().begin() + static_cast<std::ptrdiff_t>(i * s.query.size()));
    std::copy(s.reference.storage().begin(), s.reference.storage().end(),
              batch.references.storage().begin() + static_cast<std::ptrdiff_t>(i * s.reference.size()));
    batch.boxes.push_back(s.gt);
  }
  return batch;
}

Anchors mean_box_size(std::span<const PreparedSample> samples) {
  if (samples.empty()) throw PreconditionError("anchor estimation needs at least one sample");
  double w = 0.0, h = 0.0;
  for (const auto& s : samples) {
    w += s.gt.w;
    h += s.gt.h;
  }
  return {w / static_cast<double>(samples.size()), h / static_cast<double>(samples.size())};
}

}  // namespace vageo
