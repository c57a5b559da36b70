// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/gradcheck.hpp"
#include "../support/scratch.hpp"
#include "cli.hpp"
#include "vageo/config.hpp"
#include "vageo/csha.hpp"
#include "vageo/eval.hpp"
#include "vageo/model.hpp"
#include "vageo/pipeline.hpp"
#include "vageo/synth.hpp"
#include "vageo/train.hpp"
#include "vageo/vspe.hpp"

using namespace vageo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// ---------------------------------------------------------------- 1

Outcome check_ground_encoding() {
  GroundEncodingConfig cfg;
  cfg.sigma = 25.0;
  cfg.kernel = GroundKernel::paper_squared;
  cfg.normalize_peak = false;
  const int64_t n = 64;
  const ClickPoint click{32, 32};
  const EncodingMap m = ground_encoding(n, n, click, cfg);
  const double at0 = m.at(32, 32), at5 = m.at(32, 37);
  const double want0 = 1.0 / (2.0 * 25.0), want5 = want0 * std::exp(-1.0);
  if (std::abs(at0 - want0) > 1e-9 || std::abs(at5 - want5) > 1e-9)
    return fail(fmt("d=0 -> %.12g, d=5 -> %.12g", at0, at5));

  // Strictly decreasing in squared distance, equal at equal distance.
  std::vector<std::pair<int64_t, double>> by_dist;
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = 0; c < n; ++c) {
      const int64_t dr = r - click.row, dc = c - click.col;
      by_dist.emplace_back(dr * dr + dc * dc, m.at(r, c));
    }
  std::sort(by_dist.begin(), by_dist.end());
  for (size_t i = 1; i < by_dist.size(); ++i) {
    const auto& [d0, v0] = by_dist[i - 1];
    const auto& [d1, v1] = by_dist[i];
    if (d1 == d0 ? v1 != v0 : !(v1 < v0)) return fail("decay not strictly monotone at d^2=" + std::to_string(d1));
  }
  for (int64_t dr = -31; dr <= 31; ++dr)
    for (int64_t dc = -31; dc <= 31; ++dc) {
      const double v = m.at(32 + dr, 32 + dc);
      if (v != m.at(32 - dr, 32 + dc) || v != m.at(32 + dr, 32 - dc) || v != m.at(32 + dc, 32 + dr))
        return fail("asymmetric at offset (" + std::to_string(dr) + "," + std::to_string(dc) + ")");
    }
  return {true, fmt("d=0 -> %.3g, d=5 -> %.6g", at0, at5)};
}

// ---------------------------------------------------------------- 2

Outcome check_drone_partition() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int64_t> pos(0, 255);
  const DroneEncodingConfig cfg;
  const std::set<double> allowed{0.60, 0.15, 0.10};
  for (int trial = 0; trial < 100; ++trial) {
    const ClickPoint click{pos(rng), pos(rng)};
    const EncodingMap m = drone_encoding(256, 256, click, cfg);
    if (m.values.size() != 256u * 256u) return fail("map size");
    if (m.at(click.row, click.col) != 0.60) return fail("click pixel is not 0.60");
    const int64_t radius = std::max({click.row, 255 - click.row, click.col, 255 - click.col});
    // Highest ring index seen at each Chebyshev radius; must never decrease.
    std::vector<int> ring_at(static_cast<size_t>(radius) + 1, 0);
    for (int64_t r = 0; r < 256; ++r)
      for (int64_t c = 0; c < 256; ++c) {
        const double v = m.at(r, c);
        if (!allowed.count(v)) return fail(fmt("unexpected value %.6g", v));
        const int64_t cheb = std::max(std::abs(r - click.row), std::abs(c - click.col));
        const int ring = cheb == 0 ? 1 : static_cast<int>(std::ceil(4.0 * static_cast<double>(cheb) / radius));
        if (v != cfg.weights[static_cast<size_t>(std::clamp(ring, 1, 4) - 1)]) return fail("pixel outside its ring");
        ring_at[static_cast<size_t>(cheb)] = std::max(ring_at[static_cast<size_t>(cheb)], ring);
      }
    for (size_t k = 1; k < ring_at.size(); ++k)
      if (ring_at[k] < ring_at[k - 1]) return fail("rings not nested");
  }
  return {true, "100 clicks, 256x256"};
}

// ---------------------------------------------------------------- 3

Outcome check_csha_identity() {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor f = random_tensor({2, 8, 6, 5}, rng, -3.0, 3.0);
    const auto r = csha_forward(f, ChannelAttentionParams::zeros(8, 4), SpatialAttentionParams::zeros(7));
    for (size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(r.output()[i] - 0.25 * f[i]));
  }
  if (worst > 1e-12) return fail(fmt("max |out - 0.25 x| = %.3g", worst));

  double lo = 1.0, hi = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor f = random_tensor({1, 4, 5, 5}, rng, -2.0, 2.0);
    SpatialAttentionParams sp = SpatialAttentionParams::zeros(3);
    sp.conv_weight = random_tensor({1, 2, 3, 3}, rng, -1.0, 1.0);
    sp.conv_bias = random_tensor({1}, rng, -1.0, 1.0);
    sp.bn.gamma = random_tensor({1}, rng, 0.2, 2.0);
    sp.bn.beta = random_tensor({1}, rng, -1.0, 1.0);
    for (Mode mode : {Mode::eval, Mode::train}) {
      const auto r = spatial_attention(f, sp, mode);
      for (double w : r.weights.values()) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
    }
  }
  if (lo < 0.5 || hi >= 1.0) return fail(fmt("spatial weights span [%.6g, %.17g]", lo, hi));
  return {true, fmt("max error %.2g, spatial weights in [%.4f, %.4f]", worst, lo, hi)};
}

// ---------------------------------------------------------------- 4

Outcome check_gradient_oracle() {
  std::mt19937_64 rng(4);
  testing::GradCheckReport report;
  for (Mode mode : {Mode::train, Mode::eval}) {
    Tensor f = random_tensor({1, 4, 3, 3}, rng, 0.1, 1.0);
    ChannelAttentionParams cp{4, 2, random_tensor({4, 2}, rng, -1.0, 1.0), random_tensor({2, 4}, rng, -1.0, 1.0)};
    SpatialAttentionParams sp = SpatialAttentionParams::zeros(3);
    sp.conv_weight = random_tensor({1, 2, 3, 3}, rng, -1.0, 1.0);
    sp.conv_bias = random_tensor({1}, rng, -0.5, 0.5);
    sp.bn.gamma = random_tensor({1}, rng, 0.5, 1.5);
    sp.bn.beta = random_tensor({1}, rng, 0.1, 0.5);
    const Tensor probe = random_tensor(f.shape(), rng, -1.0, 1.0);
    auto loss = [&] {
      const auto r = csha_forward(f, cp, sp, mode);
      double s = 0.0;
      for (size_t i = 0; i < probe.size(); ++i) s += probe[i] * r.output()[i];
      return s;
    };
    const auto g = csha_backward(f, cp, sp, csha_forward(f, cp, sp, mode), probe);
    testing::check_gradient("input", f.storage(), g.input.storage(), loss, report);
    testing::check_gradient("w1", cp.w1.storage(), g.channel.w1.storage(), loss, report);
    testing::check_gradient("w2", cp.w2.storage(), g.channel.w2.storage(), loss, report);
    testing::check_gradient("conv_weight", sp.conv_weight.storage(), g.spatial.conv_weight.storage(), loss, report);
    testing::check_gradient("gamma", sp.bn.gamma.storage(), g.spatial.bn_gamma.storage(), loss, report);
    testing::check_gradient("beta", sp.bn.beta.storage(), g.spatial.bn_beta.storage(), loss, report);
    testing::check_gradient("conv_bias", sp.conv_bias.storage(), g.spatial.conv_bias.storage(), loss, report);
  }

  // Detection loss on a 3x3 grid, two samples.
  Tensor logits = random_tensor({2, 3, 3, 5}, rng, -2.0, 2.0);
  const std::vector<BBox> gts{{20.0, 9.0, 12.0, 20.0}, {3.0, 40.0, 7.0, 5.0}};
  const Anchors anchors{10.0, 12.0};
  auto loss = [&] { return detection_loss(DetectionGrid::from_logits(logits), gts, 16, anchors).value; };
  const LossResult lr = detection_loss(DetectionGrid::from_logits(logits), gts, 16, anchors);
  testing::check_gradient("logits", logits.storage(), lr.grad_logits.storage(), loss, report);

  if (report.max_rel_error >= 1e-4) return fail(fmt("max relative error %.3g", report.max_rel_error) + " at " + report.worst);
  return {true, fmt("max relative error %.2g over %.0f entries", report.max_rel_error, static_cast<double>(report.checked))};
}

// ---------------------------------------------------------------- 5

double raster_iou(const BBox& a, const BBox& b) {
  const int x_lo = static_cast<int>(std::floor(std::min(a.x0(), b.x0())));
  const int x_hi = static_cast<int>(std::ceil(std::max(a.x1(), b.x1())));
  const int y_lo = static_cast<int>(std::floor(std::min(a.y0(), b.y0())));
  const int y_hi = static_cast<int>(std::ceil(std::max(a.y1(), b.y1())));
  long inter = 0, uni = 0;
  for (int y = y_lo; y < y_hi; ++y)
    for (int x = x_lo; x < x_hi; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const bool ia = px > a.x0() && px < a.x1() && py > a.y0() && py < a.y1();
      const bool ib = px > b.x0() && px < b.x1() && py > b.y0() && py < b.y1();
      inter += ia && ib;
      uni += ia || ib;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Outcome check_iou_oracle() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pos(0, 60), size(1, 30);
  auto box = [&] {
    const int x = pos(rng), y = pos(rng);
    return BBox::from_corners(x, y, x + size(rng), y + size(rng));
  };
  double worst = 0.0;
  std::vector<BBox> preds, gts;
  for (int i = 0; i < 1000; ++i) {
    const BBox a = box(), b = box();
    worst = std::max(worst, std::abs(iou(a, b) - raster_iou(a, b)));
    preds.push_back(a);
    gts.push_back(b);
  }
  if (worst >= 1e-6) return fail(fmt("max |iou - raster| = %.3g", worst));
  const double a25 = accuracy_at(preds, gts, 0.25), a50 = accuracy_at(preds, gts, 0.5);
  if (a50 > a25) return fail(fmt("acc@0.5 %.4f > acc@0.25 %.4f", a50, a25));
  return {true, fmt("max error %.2g; acc@0.25 %.3f >= acc@0.5 %.3f", worst, a25, a50)};
}

// ---------------------------------------------------------------- 6

double logit(double p) { return std::log(p / (1.0 - p)); }

Outcome check_round_trip() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int64_t stride = 16, rows = 16, cols = 16;
  const Anchors anchors{48.0, 36.0};
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const double w = 2.0 + u(rng) * 100.0, h = 2.0 + u(rng) * 100.0;
    const BBox gt{w / 2 + u(rng) * (256.0 - w), h / 2 + u(rng) * (256.0 - h), w, h};
    const GridTarget t = encode_box(gt, stride, rows, cols, anchors);
    Tensor raw({1, rows, cols, 5}, 0.0);
    const auto base = static_cast<size_t>((t.row * cols + t.col) * 5);
    raw[base + 0] = logit(t.tx);
    raw[base + 1] = logit(t.ty);
    raw[base + 2] = t.tw;
    raw[base + 3] = t.th;
    raw[base + 4] = 5.0;
    const CellPrediction p = predict_box(DetectionGrid::from_logits(raw), 0, stride, anchors);
    worst = std::max({worst, std::abs(p.box.cx - gt.cx), std::abs(p.box.cy - gt.cy), std::abs(p.box.w - gt.w),
                      std::abs(p.box.h - gt.h)});
  }
  if (worst >= 1e-6) return fail(fmt("max coordinate error %.3g", worst));
  return {true, fmt("max coordinate error %.2g", worst)};
}

// ---------------------------------------------------------------- 7

Outcome check_overfit() {
  testing::ScratchDir dir("accept_overfit");
  SynthConfig sc;
  sc.n = 8;
  sc.seed = 7;
  sc.view = QueryView::drone;
  const DatasetManifest data = synth_generate(sc, dir.path());

  RunConfig cfg = preset_config("toy", QueryView::drone);
  cfg.seed = 7;
  cfg.train.batch_size = 8;
  cfg.train.halve_every = 100000;
  TrainLoopOptions opts;
  opts.max_steps = 300;
  TrainedModel tm = train_from_config(cfg, data, opts);
  const auto& steps = tm.result.steps;
  const double first = steps.front().loss, last = steps.back().loss;
  const EvalReport r = evaluate(model_predictor(*tm.model, tm.config.input, tm.config.encoder), data);
  const std::string detail = fmt("%.0f steps, loss %.4g -> %.4g; acc@0.5 %.3f", static_cast<double>(steps.size()),
                                 first, last, r.acc_at_50) +
                             fmt(", mIoU %.3f", r.mean_iou);
  return {last < 0.1 * first && r.acc_at_50 == 1.0, detail};
}

// ---------------------------------------------------------------- 8

Outcome check_schedule() {
  TrainConfig c;
  c.lr0 = 0.0001;
  c.halve_every = 10;
  const double a = lr_schedule(0, c), b = lr_schedule(10, c), d = lr_schedule(20, c);
  if (a != 0.0001 || b != 0.00005 || d != 0.000025) return fail(fmt("got %.17g / %.17g / %.17g", a, b, d));
  if (lr_schedule(9, c) != a || lr_schedule(19, c) != b) return fail("rate changed inside a 10-epoch block");
  return {true, "0.0001 / 0.00005 / 0.000025"};
}

// ---------------------------------------------------------------- 9

bool exhaustive_hit(const std::vector<double>& s, const PatchGrid& grid, const BBox& gt, double tau) {
  for (size_t i = 0; i < s.size(); ++i) {
    int ahead = 0;
    for (size_t j = 0; j < s.size(); ++j) ahead += s[j] > s[i] || (s[j] == s[i] && j < i);
    if (ahead >= 5) continue;
    const double size = static_cast<double>(grid.patch_size);
    const double x0 = static_cast<double>(static_cast<int64_t>(i) % grid.cols) * size;
    const double y0 = static_cast<double>(static_cast<int64_t>(i) / grid.cols) * size;
    if (iou(BBox::from_corners(x0, y0, x0 + size, y0 + size), gt) >= tau) return true;
  }
  return false;
}

Outcome check_patch_protocol() {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> level(0, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PatchGrid grid{8, 8, 128};
  for (int n = 0; n < 200; ++n) {
    std::vector<double> scores(64);
    for (auto& s : scores) s = n % 2 ? u(rng) : level(rng);
    const BBox gt{u(rng) * 1024.0, u(rng) * 1024.0, 32.0 + u(rng) * 200.0, 32.0 + u(rng) * 200.0};
    for (double tau : {0.25, 0.5}) {
      const bool got = patch_retrieval_protocol(scores, grid, gt, tau);
      if (got != exhaustive_hit(scores, grid, gt, tau)) return fail("disagrees with the oracle on grid " + std::to_string(n));
      if (got != patch_retrieval_protocol(scores, grid, gt, tau)) return fail("nondeterministic on grid " + std::to_string(n));
    }
  }
  const std::vector<double> flat(64, 0.5);
  if (!patch_retrieval_protocol(flat, grid, grid.patch_box(4), 0.5) ||
      patch_retrieval_protocol(flat, grid, grid.patch_box(5), 0.5))
    return fail("ties do not resolve to the first five patches");
  return {true, "200 grids agree with the exhaustive oracle"};
}

// ---------------------------------------------------------------- 10

int quiet_cli(const std::vector<std::string>& args) {
  std::ostringstream sink;
  auto* out = std::cout.rdbuf(sink.rdbuf());
  auto* err = std::cerr.rdbuf(sink.rdbuf());
  const int code = cli::run(args);
  std::cout.rdbuf(out);
  std::cerr.rdbuf(err);
  return code;
}

std::string check_table(const std::filesystem::path& dir, const std::vector<std::string>& expected) {
  const Json t = Json::parse(testing::read_bytes(dir / "sweep.json"));
  const auto& rows = t["rows"];
  if (rows.size() != expected.size()) return "expected " + std::to_string(expected.size()) + " rows";
  std::multiset<std::string> seen;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]["rank"] != static_cast<int>(i + 1)) return "ranks out of order";
    if (i > 0 && rows[i]["acc_at_50"].get<double>() > rows[i - 1]["acc_at_50"].get<double>()) return "not ranked";
    seen.insert(rows[i]["value"].get<std::string>());
  }
  if (seen != std::multiset<std::string>(expected.begin(), expected.end())) return "row values differ";
  if (!std::filesystem::exists(dir / "sweep.csv") || !std::filesystem::exists(dir / "sweep.txt")) return "missing table";
  return "";
}

Outcome check_ablation_harness() {
  testing::ScratchDir dir("accept_sweep");
  ::setenv("VAGEO_OUTPUT_ROOT", dir.path().c_str(), 1);
  const std::string common = R"("backbone": {"stage_channels": [4, 8]}, "csha": {"reduction": 2, "kernel": 3},
    "train": {"lr0": 0.001, "batch_size": 4})";
  testing::write_text_file(dir / "drone.json", R"({"input": {"query": [32, 32], "reference": [64, 64]}, )" + common + "}");
  testing::write_text_file(dir / "ground.json", R"({"input": {"query": [32, 64], "reference": [64, 64]}, )" + common + "}");
  std::string err;
  if (quiet_cli({"synth", "--n", "6", "--seed", "10", "--view", "drone", "--out", "drone", "--reference-size", "64",
                 "64", "--query-size", "32", "32"}) != 0 ||
      quiet_cli({"synth", "--n", "6", "--seed", "10", "--view", "ground", "--out", "ground", "--reference-size", "64",
                 "64", "--query-size", "32", "64"}) != 0) {
    err = "synth failed";
  } else if (quiet_cli({"sweep", "--data", (dir / "drone/manifest.jsonl").string(), "--config",
                        (dir / "drone.json").string(), "--param", "ring-weights", "--max-steps", "3",
                        "--out", "rings"}) != 0) {
    err = "ring-weight sweep failed";
  } else if (quiet_cli({"sweep", "--data", (dir / "ground/manifest.jsonl").string(), "--config",
                        (dir / "ground.json").string(), "--param", "sigma",
                        "--max-steps", "3", "--out", "sigmas"}) != 0) {
    err = "sigma sweep failed";
  } else {
    std::vector<std::string> weights;
    for (const auto& w : kDroneWeightAblation) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f/%.2f/%.2f/%.2f", w[0], w[1], w[2], w[3]);
      weights.emplace_back(buf);
    }
    err = check_table(dir / "rings", weights);
    if (err.empty()) err = check_table(dir / "sigmas", {"5", "15", "25", "50"});
  }
  ::unsetenv("VAGEO_OUTPUT_ROOT");
  if (!err.empty()) return fail(err);
  return {true, "8 ring-weight rows and 4 sigma rows, ranked"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "ground encoding analytic values", 1.0, check_ground_encoding},
      {2, "drone encoding partition", 5.0, check_drone_partition},
      {3, "attention zero-parameter identity", 0.0, check_csha_identity},
      {4, "gradient oracle", 30.0, check_gradient_oracle},
      {5, "IoU oracle", 0.0, check_iou_oracle},
      {6, "box encode/decode round trip", 0.0, check_round_trip},
      {7, "overfit smoke test", 300.0, check_overfit},
      {8, "learning-rate schedule", 0.0, check_schedule},
      {9, "patch-retrieval protocol", 0.0, check_patch_protocol},
      {10, "ablation harness", 0.0, check_ablation_harness},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && c.budget_s > 0 && secs >= c.budget_s) o = fail(o.detail + "; over the " + fmt("%.0f s budget", c.budget_s));
    failures += !o.pass;
    std::printf("%s  %2d  %-36s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
