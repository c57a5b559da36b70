#include "vageo/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vageo/error.hpp"

namespace vageo {
namespace fs = std::filesystem;

namespace {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Explicit generator and distributions so scenes are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}
  uint64_t bits() { return splitmix64(state_); }
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int64_t integer(int64_t lo, int64_t hi) { return lo + static_cast<int64_t>(bits() % static_cast<uint64_t>(hi - lo + 1)); }

 private:
  uint64_t state_;
};

uint64_t hash3(int64_t x, int64_t y, uint64_t salt) {
  uint64_t s = salt ^ (static_cast<uint64_t>(x) * 0x9e3779b97f4a7c15ULL) ^ (static_cast<uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL);
  return splitmix64(s);
}

double lattice(int64_t x, int64_t y, uint64_t salt) { return static_cast<double>(hash3(x, y, salt) >> 11) * 0x1.0p-53; }

// Smooth value noise in [0, 1).
double value_noise(double x, double y, double scale, uint64_t salt) {
  const double fx = x / scale, fy = y / scale;
  const double x0 = std::floor(fx), y0 = std::floor(fy);
  const auto ix = static_cast<int64_t>(x0), iy = static_cast<int64_t>(y0);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double ax = smooth(fx - x0), ay = smooth(fy - y0);
  const double top = lattice(ix, iy, salt) * (1 - ax) + lattice(ix + 1, iy, salt) * ax;
  const double bottom = lattice(ix, iy + 1, salt) * (1 - ax) + lattice(ix + 1, iy + 1, salt) * ax;
  return top * (1 - ay) + bottom * ay;
}

using Rgb = std::array<double, 3>;

Rgb hsv(double h, double s, double v) {
  const double c = v * s, hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  Rgb rgb{};
  switch (static_cast<int>(hp)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  for (auto& ch : rgb) ch = 255.0 * (ch + v - c);
  return rgb;
}

struct Polygon {
  std::vector<std::array<double, 2>> vertices;  // (x, y) world units
  Rgb colour{};
  double cx = 0, cy = 0, radius = 0;

  bool contains(double x, double y) const {
    bool inside = false;
    for (size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
      const auto& a = vertices[i];
      const auto& b = vertices[j];
      if ((a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0]) inside = !inside;
    }
    return inside;
  }
};

Polygon random_polygon(Rng& rng, double radius, double width, double height) {
  Polygon p;
  p.radius = radius;
  p.cx = rng.uniform(radius, width - radius);
  p.cy = rng.uniform(radius, height - radius);
  const auto k = rng.integer(3, 7);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(k);
  const double start = rng.uniform(0.0, step);
  for (int64_t i = 0; i < k; ++i) {
    const double a = start + step * (static_cast<double>(i) + rng.uniform(-0.3, 0.3));
    const double r = radius * rng.uniform(0.7, 1.0);
    p.vertices.push_back({p.cx + r * std::cos(a), p.cy + r * std::sin(a)});
  }
  p.colour = hsv(rng.uniform(), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0));
  return p;
}

struct World {
  std::vector<Polygon> polygons;  // target last
  Rgb ground{};
  uint64_t salt = 0;

  const Polygon& target() const { return polygons.back(); }

  Rgb colour(double x, double y) const {
    for (auto it = polygons.rbegin(); it != polygons.rend(); ++it) {
      if (it->contains(x, y)) {
        const double shade = 0.9 + 0.1 * value_noise(x, y, 4.0, salt + 7);
        return {it->colour[0] * shade, it->colour[1] * shade, it->colour[2] * shade};
      }
    }
    const double lum = 0.75 + 0.35 * (value_noise(x, y, 16.0, salt) - 0.5) + 0.2 * (value_noise(x, y, 5.0, salt + 1) - 0.5);
    return {ground[0] * lum, ground[1] * lum, ground[2] * lum};
  }
};

uint8_t to_byte(double v) { return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void put(Image& img, int64_t r, int64_t c, const Rgb& rgb) {
  for (int64_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = to_byte(rgb[static_cast<size_t>(ch)]);
}

// Renders the query through a camera mapping from query pixel centres to
// world coordinates (or nullopt for sky).
template <typename Camera>
void render_query(const World& world, Scene& scene, ImageDims dims, const Camera& camera, const Rgb& sky) {
  scene.query = Image(dims.height, dims.width, 3);
  scene.query_mask.assign(static_cast<size_t>(dims.height * dims.width), 0);
  for (int64_t r = 0; r < dims.height; ++r) {
    for (int64_t c = 0; c < dims.width; ++c) {
      double x = 0, y = 0, fog = 0;
      if (!camera(r, c, x, y, fog)) {
        const double t = (static_cast<double>(r) + 0.5) / static_cast<double>(dims.height);
        put(scene.query, r, c, {sky[0] * (0.8 + 0.4 * t), sky[1] * (0.8 + 0.4 * t), sky[2]});
        continue;
      }
      Rgb rgb = world.colour(x, y);
      for (size_t ch = 0; ch < 3; ++ch) rgb[ch] = (1 - fog) * rgb[ch] + fog * sky[ch];
      put(scene.query, r, c, rgb);
      if (world.target().contains(x, y)) scene.query_mask[static_cast<size_t>(r * dims.width + c)] = 1;
    }
  }
}

ClickPoint mask_click(const std::vector<uint8_t>& mask, int64_t height, int64_t width) {
  double sr = 0, sc = 0, count = 0;
  for (int64_t r = 0; r < height; ++r)
    for (int64_t c = 0; c < width; ++c)
      if (mask[static_cast<size_t>(r * width + c)]) {
        sr += static_cast<double>(r);
        sc += static_cast<double>(c);
        ++count;
      }
  const ClickPoint centroid{std::lround(sr / count), std::lround(sc / count)};
  if (mask[static_cast<size_t>(centroid.row * width + centroid.col)]) return centroid;
  // Non-convex visible region: snap to the nearest target pixel.
  ClickPoint best = centroid;
  int64_t best_d = INT64_MAX;
  for (int64_t r = 0; r < height; ++r)
    for (int64_t c = 0; c < width; ++c) {
      if (!mask[static_cast<size_t>(r * width + c)]) continue;
      const int64_t d = (r - centroid.row) * (r - centroid.row) + (c - centroid.col) * (c - centroid.col);
      if (d < best_d) {
        best_d = d;
        best = {r, c};
      }
    }
  return best;
}

int64_t mask_count(const std::vector<uint8_t>& mask) { return std::count(mask.begin(), mask.end(), uint8_t{1}); }

}  // namespace

void SynthConfig::validate() const {
  if (n <= 0) throw ConfigError("synth: n must be positive");
  if (reference.height < 32 || reference.width < 32) throw ConfigError("synth: reference must be at least 32x32");
  if (query.height < 16 || query.width < 16) throw ConfigError("synth: query must be at least 16x16");
}

ImageDims default_query_dims(QueryView view) { return view == QueryView::ground ? ImageDims{128, 256} : ImageDims{128, 128}; }

BBox mask_box(const std::vector<uint8_t>& mask, int64_t height, int64_t width) {
  int64_t r0 = height, r1 = -1, c0 = width, c1 = -1;
  for (int64_t r = 0; r < height; ++r)
    for (int64_t c = 0; c < width; ++c)
      if (mask[static_cast<size_t>(r * width + c)]) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  if (r1 < 0) throw PreconditionError("mask_box: empty mask");
  return BBox::from_corners(static_cast<double>(c0), static_cast<double>(r0), static_cast<double>(c1 + 1),
                            static_cast<double>(r1 + 1));
}

Scene generate_scene(uint64_t seed, int64_t index, QueryView view, ImageDims reference, ImageDims query) {
  uint64_t mix = seed ^ (0xd1b54a32d192ed03ULL * static_cast<uint64_t>(index + 1));
  Rng rng(splitmix64(mix));
  const auto W = static_cast<double>(reference.width), H = static_cast<double>(reference.height);
  const double side = std::min(W, H);

  World world;
  world.salt = rng.bits();
  world.ground = hsv(rng.uniform(0.05, 0.35), rng.uniform(0.2, 0.5), rng.uniform(0.45, 0.7));
  const auto count = rng.integer(2, 5);
  for (int64_t i = 0; i + 1 < count; ++i) world.polygons.push_back(random_polygon(rng, side * rng.uniform(0.05, 0.14), W, H));
  world.polygons.push_back(random_polygon(rng, side * rng.uniform(0.08, 0.16), W, H));
  const Polygon& target = world.target();
  const Rgb sky = hsv(rng.uniform(0.55, 0.65), rng.uniform(0.3, 0.6), rng.uniform(0.75, 0.95));

  Scene scene;
  scene.reference = Image(reference.height, reference.width, 3);
  scene.reference_mask.assign(static_cast<size_t>(reference.height * reference.width), 0);
  for (int64_t r = 0; r < reference.height; ++r) {
    for (int64_t c = 0; c < reference.width; ++c) {
      const double x = static_cast<double>(c) + 0.5, y = static_cast<double>(r) + 0.5;
      put(scene.reference, r, c, world.colour(x, y));
      if (target.contains(x, y)) scene.reference_mask[static_cast<size_t>(r * reference.width + c)] = 1;
    }
  }
  scene.gt = mask_box(scene.reference_mask, reference.height, reference.width);

  const auto qh = static_cast<double>(query.height), qw = static_cast<double>(query.width);
  const int64_t min_visible = std::max<int64_t>(12, query.height * query.width / 400);
  for (int attempt = 0; attempt < 64; ++attempt) {
    if (view == QueryView::drone) {
      // Rotated, zoomed crop around the target.
      const double extent = side * rng.uniform(0.55, 0.8);
      const double scale = extent / std::min(qh, qw);
      const double theta = rng.uniform(-0.3, 0.3);
      const double ox = target.cx + rng.uniform(-0.15, 0.15) * extent;
      const double oy = target.cy + rng.uniform(-0.15, 0.15) * extent;
      const double cs = std::cos(theta), sn = std::sin(theta);
      render_query(world, scene, query, [&](int64_t r, int64_t c, double& x, double& y, double& fog) {
        const double u = scale * (static_cast<double>(c) + 0.5 - qw / 2), v = scale * (static_cast<double>(r) + 0.5 - qh / 2);
        x = ox + cs * u - sn * v;
        y = oy + sn * u + cs * v;
        fog = 0.0;
        return true;
      }, sky);
    } else {
      // Pinhole camera over the ground plane looking towards -y, sky above the horizon.
      const double horizon = std::round(qh * rng.uniform(0.3, 0.4));
      const double near = 0.1 * H;
      const double depth = H * rng.uniform(0.25, 0.45);
      const double tan_half = rng.uniform(0.5, 0.8);
      const double cam_x = target.cx + rng.uniform(-0.3, 0.3) * depth * tan_half;
      const double cam_y = target.cy + depth;
      render_query(world, scene, query, [&](int64_t r, int64_t c, double& x, double& y, double& fog) {
        const double v = (static_cast<double>(r) + 0.5 - horizon) / (qh - horizon);
        if (v <= 0) return false;
        const double d = near / v;
        y = cam_y - d;
        x = cam_x + ((static_cast<double>(c) + 0.5) / qw * 2.0 - 1.0) * d * tan_half;
        fog = std::min(0.6, d / (4.0 * H));
        return true;
      }, sky);
    }
    if (mask_count(scene.query_mask) >= min_visible) {
      scene.click = mask_click(scene.query_mask, query.height, query.width);
      return scene;
    }
  }
  throw PreconditionError("synth: target never visible in the query view");
}

DatasetManifest synth_generate(const SynthConfig& config, const fs::path& out_dir) {
  config.validate();
  const fs::path images = out_dir / "images";
  std::error_code ec;
  fs::create_directories(images, ec);
  if (ec) throw IoError("cannot create '" + images.string() + "': " + ec.message());
  DatasetManifest m;
  m.root = fs::absolute(out_dir);
  for (int64_t i = 0; i < config.n; ++i) {
    const Scene scene = generate_scene(config.seed, i, config.view, config.reference, config.query);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05lld", static_cast<long long>(i));
    Sample s;
    s.query_path = m.root / "images" / (std::string(stem) + "_query.png");
    s.reference_path = m.root / "images" / (std::string(stem) + "_reference.png");
    write_png(s.query_path, scene.query);
    write_png(s.reference_path, scene.reference);
    s.view = config.view;
    s.click = scene.click;
    s.gt_box = scene.gt;
    s.query_dims = config.query;
    s.reference_dims = config.reference;
    m.samples.push_back(std::move(s));
  }
  validate_manifest(m);
  write_manifest(out_dir / "manifest.jsonl", m);
  return m;
}

}  // namespace vageo
