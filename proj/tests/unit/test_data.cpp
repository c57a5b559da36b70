#include <doctest.h>

#include <set>

#include "../support/scratch.hpp"
#include "vageo/data.hpp"
#include "vageo/error.hpp"
#include "vageo/image.hpp"

using namespace vageo;
using testing::ScratchDir;
using testing::write_text_file;

namespace {

void blank_png(const std::filesystem::path& p, int64_t h, int64_t w) { write_png(p, Image(h, w, 3, 100)); }

// Three ground samples over two references, images 256x512 / 64x64.
void make_images(const ScratchDir& dir) {
  blank_png(dir / "g0.png", 256, 512);
  blank_png(dir / "g1.png", 256, 512);
  blank_png(dir / "g2.png", 256, 512);
  blank_png(dir / "r0.png", 64, 64);
  blank_png(dir / "r1.png", 64, 64);
}

const char* kThreeLines =
    R"({"query": "g0.png", "reference": "r0.png", "view": "ground", "click": [10, 20], "bbox": [32, 32, 10, 12]}
{"query": "g1.png", "reference": "r0.png", "view": "ground", "click": [255, 511], "bbox": [5, 5, 10, 10]}

{"query": "g2.png", "reference": "r1.png", "view": "ground", "click": [0, 0], "bbox": [59, 60, 10, 8]}
)";

}  // namespace

TEST_CASE("manifest: well-formed file loads every record") {
  ScratchDir dir("manifest_ok");
  make_images(dir);
  write_text_file(dir / "m.jsonl", kThreeLines);
  const DatasetManifest m = load_manifest(dir / "m.jsonl");
  REQUIRE(m.samples.size() == 3);
  CHECK(m.samples[1].click == ClickPoint{255, 511});
  CHECK(m.samples[2].gt_box == BBox{59, 60, 10, 8});
  CHECK(m.samples[0].query_dims == ImageDims{256, 512});
  CHECK(m.samples[0].reference_dims == ImageDims{64, 64});
  CHECK(m.samples[0].query_path.is_absolute());
  CHECK_FALSE(m.matches_expected_dims());
}

TEST_CASE("manifest: benchmark image sizes are recognised") {
  ScratchDir dir("manifest_dims");
  blank_png(dir / "g.png", 256, 512);
  blank_png(dir / "d.png", 256, 256);
  blank_png(dir / "s.png", 1024, 1024);
  write_text_file(dir / "m.jsonl",
                  R"({"query": "g.png", "reference": "s.png", "view": "ground", "click": [1, 1], "bbox": [500, 500, 40, 40]}
{"query": "d.png", "reference": "s.png", "view": "drone", "click": [1, 1], "bbox": [100, 100, 40, 40]}
)");
  const DatasetManifest m = load_manifest(dir / "m.jsonl");
  CHECK(m.expected.satellite == ImageDims{1024, 1024});
  CHECK(m.expected.ground == ImageDims{256, 512});
  CHECK(m.expected.drone == ImageDims{256, 256});
  CHECK(m.matches_expected_dims());
}

TEST_CASE("manifest: out-of-bounds click or box is a validation error") {
  ScratchDir dir("manifest_bounds");
  make_images(dir);
  write_text_file(dir / "col.jsonl",
                  R"({"query": "g0.png", "reference": "r0.png", "view": "ground", "click": [10, 512], "bbox": [32, 32, 10, 10]})");
  CHECK_THROWS_AS(load_manifest(dir / "col.jsonl"), ValidationError);
  write_text_file(dir / "box.jsonl",
                  R"({"query": "g0.png", "reference": "r0.png", "view": "ground", "click": [10, 10], "bbox": [60, 32, 10, 10]})");
  CHECK_THROWS_AS(load_manifest(dir / "box.jsonl"), ValidationError);
  write_text_file(dir / "missing.jsonl",
                  R"({"query": "nope.png", "reference": "r0.png", "view": "ground", "click": [10, 10], "bbox": [32, 32, 10, 10]})");
  CHECK_THROWS_AS(load_manifest(dir / "missing.jsonl"), ValidationError);
}

TEST_CASE("manifest: malformed records report their line number") {
  ScratchDir dir("manifest_parse");
  make_images(dir);
  const std::string good =
      R"({"query": "g0.png", "reference": "r0.png", "view": "ground", "click": [10, 20], "bbox": [32, 32, 10, 12]})";
  const char* bad[] = {
      R"({"query": "g1.png", "reference": "r0.png", "view": "ground", "click": [10, 20], "bbox": [32, 32, 10]})",
      R"({"query": "g1.png", "reference": "r0.png", "view": "sideways", "click": [10, 20], "bbox": [32, 32, 10, 12]})",
      R"({"query": "g1.png", "reference": "r0.png", "view": "ground", "click": [10.5, 20], "bbox": [32, 32, 10, 12]})",
      R"({"query": "g1.png", "view": "ground", "click": [10, 20], "bbox": [32, 32, 10, 12]})",
      R"(not json)",
  };
  for (const char* line : bad) {
    write_text_file(dir / "m.jsonl", good + "\n" + line + "\n");
    try {
      load_manifest(dir / "m.jsonl");
      FAIL("expected a parse error for " << line);
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("manifest: duplicate (query, reference) pairs are rejected") {
  ScratchDir dir("manifest_dup");
  make_images(dir);
  const std::string line =
      R"({"query": "g0.png", "reference": "r0.png", "view": "ground", "click": [10, 20], "bbox": [32, 32, 10, 12]})";
  write_text_file(dir / "m.jsonl", line + "\n" + line + "\n");
  CHECK_THROWS_AS(load_manifest(dir / "m.jsonl"), ValidationError);
}

TEST_CASE("manifest: write then load round-trips with relative paths") {
  ScratchDir dir("manifest_rt");
  make_images(dir);
  write_text_file(dir / "m.jsonl", kThreeLines);
  const DatasetManifest m = load_manifest(dir / "m.jsonl");
  write_manifest(dir / "copy.jsonl", m);
  CHECK(testing::read_bytes(dir / "copy.jsonl").find("\"query\":\"g0.png\"") != std::string::npos);
  const DatasetManifest back = load_manifest(dir / "copy.jsonl");
  REQUIRE(back.samples.size() == m.samples.size());
  for (size_t i = 0; i < m.samples.size(); ++i) {
    CHECK(back.samples[i].query_path == m.samples[i].query_path);
    CHECK(back.samples[i].click == m.samples[i].click);
    CHECK(back.samples[i].gt_box == m.samples[i].gt_box);
  }
}

TEST_CASE("split: fractions, disjointness and reproducibility") {
  DatasetManifest m;
  for (int i = 0; i < 23; ++i) {
    Sample s;
    s.query_path = "q" + std::to_string(i);
    s.reference_path = "r";
    m.samples.push_back(s);
  }
  auto [all, none_v, none_t] = split_manifest(m, {1.0, 0.0, 0.0}, 3);
  CHECK(all.samples.size() == 23);
  CHECK(none_v.samples.empty());
  CHECK(none_t.samples.empty());

  auto [tr, va, te] = split_manifest(m, {0.6, 0.2, 0.2}, 7);
  CHECK(tr.split == Split::train);
  CHECK(va.split == Split::validation);
  CHECK(te.split == Split::test);
  std::multiset<std::string> seen;
  for (const auto* part : {&tr, &va, &te})
    for (const auto& s : part->samples) seen.insert(s.query_path.string());
  CHECK(seen.size() == 23);
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == 23);
  CHECK(tr.samples.size() == 14);
  CHECK(va.samples.size() == 5);

  auto [tr2, va2, te2] = split_manifest(m, {0.6, 0.2, 0.2}, 7);
  for (size_t i = 0; i < tr.samples.size(); ++i) CHECK(tr.samples[i].query_path == tr2.samples[i].query_path);

  CHECK_THROWS_AS(split_manifest(m, {0.5, 0.2, 0.2}, 1), ConfigError);
  CHECK_THROWS_AS(split_manifest(m, {1.2, -0.2, 0.0}, 1), ConfigError);
}

TEST_CASE("rescaling keeps clicks in bounds and scales boxes proportionally") {
  CHECK(rescale_click({0, 0}, {256, 512}, {128, 256}) == ClickPoint{0, 0});
  CHECK(rescale_click({255, 511}, {256, 512}, {128, 256}) == ClickPoint{127, 255});
  CHECK(rescale_click({100, 301}, {256, 512}, {128, 256}) == ClickPoint{50, 150});
  CHECK(rescale_click({3, 3}, {4, 4}, {8, 8}) == ClickPoint{7, 7});
  const BBox b = rescale_box({512, 256, 100, 40}, {1024, 1024}, {256, 256});
  CHECK(b == BBox{128, 64, 25, 10});
}

TEST_CASE("prepared samples carry the encoding channel and rescaled targets") {
  ScratchDir dir("prepare");
  make_images(dir);
  write_text_file(dir / "m.jsonl", kThreeLines);
  const DatasetManifest m = load_manifest(dir / "m.jsonl");
  const InputDims dims{{64, 128}, {32, 32}};
  const auto prepared = prepare_samples(m, dims, {});
  REQUIRE(prepared.size() == 3);
  CHECK(prepared[0].query.shape() == Shape{4, 64, 128});
  CHECK(prepared[0].reference.shape() == Shape{3, 32, 32});
  CHECK(prepared[0].click == ClickPoint{2, 5});
  CHECK(prepared[0].gt == BBox{16, 16, 5, 6});
  // Peak-normalised ground map: 1 at the click.
  CHECK(prepared[0].query[static_cast<size_t>(3 * 64 * 128 + 2 * 128 + 5)] == doctest::Approx(1.0));
  const std::vector<size_t> idx{2, 0};
  const Batch b = make_batch(prepared, idx);
  CHECK(b.queries.shape() == Shape{2, 4, 64, 128});
  CHECK(b.references.shape() == Shape{2, 3, 32, 32});
  CHECK(b.boxes[0] == prepared[2].gt);
  const Anchors a = mean_box_size(prepared);
  CHECK(a.w == doctest::Approx((5.0 + 5.0 + 5.0) / 3.0));
}

TEST_CASE("annotation table adapter") {
  ScratchDir dir("adapter");
  make_images(dir);
  write_text_file(dir / "a.csv",
                  "query,reference,view,click_x,click_y,x0,y0,x1,y1\n"
                  "g0.png,r0.png,ground,20,10,27,26,37,38\n"
                  "g1.png,r1.png,ground,511,255,0,0,64,64\n");
  const DatasetManifest m = convert_annotation_csv(dir / "a.csv");
  REQUIRE(m.samples.size() == 2);
  CHECK(m.samples[0].click == ClickPoint{10, 20});
  CHECK(m.samples[0].gt_box == BBox{32, 32, 10, 12});
  write_text_file(dir / "b.csv", "query,reference,view,click_x\n");
  CHECK_THROWS_AS(convert_annotation_csv(dir / "b.csv"), ParseError);
}
