#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "vageo/error.hpp"
#include "vageo/vspe.hpp"

using namespace vageo;

TEST_CASE("ground encoding: analytic values of the squared kernel") {
  GroundEncodingConfig cfg{25.0, GroundKernel::paper_squared, false};
  const auto map = ground_encoding(64, 64, {20, 30}, cfg);
  CHECK(std::abs(map.at(20, 30) - 0.02) < 1e-12);
  // d = 5 along the row axis: 0.02 * exp(-25 / 25)
  CHECK(std::abs(map.at(25, 30) - 0.007357588823428847) < 1e-12);
  CHECK(std::abs(map.at(20, 35) - 0.007357588823428847) < 1e-12);
  CHECK(map.source_view == QueryView::ground);
}

TEST_CASE("ground encoding: laplace kernel uses the plain distance") {
  GroundEncodingConfig cfg{25.0, GroundKernel::laplace_absolute, false};
  const auto map = ground_encoding(64, 64, {10, 10}, cfg);
  // d = 5 -> 0.02 * exp(-5 / 25)
  CHECK(std::abs(map.at(15, 10) - 0.02 * std::exp(-0.2)) < 1e-12);
  // 3-4-5 triangle
  CHECK(std::abs(map.at(13, 14) - 0.02 * std::exp(-0.2)) < 1e-12);
}

TEST_CASE("ground encoding: default sigma is 25 and peak normalisation pins the click at 1") {
  GroundEncodingConfig defaults;
  CHECK(defaults.sigma == 25.0);
  CHECK(defaults.kernel == GroundKernel::paper_squared);
  CHECK(defaults.normalize_peak);
  for (double sigma : {0.5, 5.0, 25.0, 400.0}) {
    GroundEncodingConfig cfg{sigma, GroundKernel::laplace_absolute, true};
    const auto map = ground_encoding(32, 48, {7, 40}, cfg);
    CHECK(map.at(7, 40) == 1.0);
    CHECK(map.max_value() == 1.0);
  }
}

TEST_CASE("ground encoding: errors") {
  CHECK_THROWS_AS(ground_encoding(10, 10, {10, 0}, {}), PreconditionError);
  CHECK_THROWS_AS(ground_encoding(10, 10, {0, -1}, {}), PreconditionError);
  CHECK_THROWS_AS(ground_encoding(10, 10, {0, 0}, {0.0}), ConfigError);
  CHECK_THROWS_AS(ground_encoding(10, 10, {0, 0}, {-3.0}), ConfigError);
}

TEST_CASE("ground encoding: strictly decreasing in distance and reflection symmetric") {
  std::mt19937_64 rng(7);
  for (auto kernel : {GroundKernel::paper_squared, GroundKernel::laplace_absolute}) {
    GroundEncodingConfig cfg{25.0, kernel, false};
    const ClickPoint click{31, 31};
    const auto map = ground_encoding(64, 64, click, cfg);
    std::uniform_int_distribution<int64_t> pix(0, 63);
    for (int trial = 0; trial < 2000; ++trial) {
      const int64_t r1 = pix(rng), c1 = pix(rng), r2 = pix(rng), c2 = pix(rng);
      const int64_t d1 = (r1 - 31) * (r1 - 31) + (c1 - 31) * (c1 - 31);
      const int64_t d2 = (r2 - 31) * (r2 - 31) + (c2 - 31) * (c2 - 31);
      if (d1 < d2) CHECK(map.at(r1, c1) > map.at(r2, c2));
    }
    for (int64_t r = 0; r < 63; ++r)
      for (int64_t c = 0; c < 63; ++c) CHECK(map.at(r, c) == map.at(62 - r, 62 - c));
  }
}

TEST_CASE("drone encoding: ring placement for a centred click") {
  const auto map = drone_encoding(256, 256, {128, 128}, {});
  CHECK(drone_max_radius(256, 256, {128, 128}) == 128);
  CHECK(map.at(128, 128) == 0.60);
  CHECK(map.at(0, 0) == 0.10);
  // boundaries at Chebyshev radii 32, 64, 96
  CHECK(map.at(128, 128 + 32) == 0.60);
  CHECK(map.at(128, 128 + 33) == 0.15);
  CHECK(map.at(128 - 64, 128) == 0.15);
  CHECK(map.at(128 - 65, 128) == 0.15);
  CHECK(map.at(128 + 96, 128 + 96) == 0.15);
  CHECK(map.at(128 + 97, 128) == 0.10);
  CHECK(drone_ring(0, 128) == 1);
  CHECK(drone_ring(32, 128) == 1);
  CHECK(drone_ring(33, 128) == 2);
  CHECK(drone_ring(64, 128) == 2);
  CHECK(drone_ring(65, 128) == 3);
  CHECK(drone_ring(96, 128) == 3);
  CHECK(drone_ring(97, 128) == 4);
  CHECK(drone_ring(128, 128) == 4);
}

TEST_CASE("drone encoding: degenerate weights and off-centre clicks") {
  DroneEncodingConfig one{{1.0, 0.0, 0.0, 0.0}};
  const auto map = drone_encoding(64, 64, {10, 50}, one);
  const int64_t radius = drone_max_radius(64, 64, {10, 50});
  CHECK(radius == 53);
  for (int64_t r = 0; r < 64; ++r) {
    for (int64_t c = 0; c < 64; ++c) {
      const int64_t cheb = std::max(std::abs(r - 10), std::abs(c - 50));
      CHECK(map.at(r, c) == (drone_ring(cheb, radius) == 1 ? 1.0 : 0.0));
    }
  }
  // farthest corner (63, 0) sits in the last ring
  const auto dflt = drone_encoding(64, 64, {10, 50}, {});
  CHECK(dflt.at(63, 0) == 0.10);
  // 1x1 image: the single pixel is ring 1
  CHECK(drone_encoding(1, 1, {0, 0}, {}).at(0, 0) == 0.60);
}

TEST_CASE("drone encoding: config validation") {
  CHECK_THROWS_AS(drone_encoding(8, 8, {0, 0}, {{0.5, 0.2, 0.2, 0.2}}), ConfigError);
  CHECK_THROWS_AS(drone_encoding(8, 8, {0, 0}, {{1.2, -0.2, 0.0, 0.0}}), ConfigError);
  CHECK_THROWS_AS(drone_encoding(8, 8, {8, 0}, {}), PreconditionError);
  for (const auto& w : kDroneWeightAblation) CHECK_NOTHROW(DroneEncodingConfig{w}.validate());
}

TEST_CASE("encoders are deterministic") {
  const auto a = ground_encoding(40, 80, {12, 70}, {});
  const auto b = ground_encoding(40, 80, {12, 70}, {});
  CHECK(a.values == b.values);
  const auto c = drone_encoding(40, 40, {3, 5}, {});
  const auto d = drone_encoding(40, 40, {3, 5}, {});
  CHECK(c.values == d.values);
}

TEST_CASE("attach_encoding appends the map as the last channel") {
  Tensor image({3, 256, 512}, 0.25);
  const auto map = ground_encoding(256, 512, {100, 300}, {});
  const Tensor out = attach_encoding(image, map);
  CHECK(out.shape() == Shape{4, 256, 512});
  CHECK(out[static_cast<size_t>((3 * 256 + 100) * 512 + 300)] == map.max_value());
  CHECK(out[static_cast<size_t>((2 * 256 + 100) * 512 + 300)] == 0.25);

  Tensor square({3, 256, 256});
  CHECK_THROWS_AS(attach_encoding(square, map), ShapeError);
}
