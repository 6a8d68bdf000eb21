#include <catch2/catch_amalgamated.hpp>

#include "reference_oracles.hpp"
#include "ssimrc/metrics.hpp"
#include "test_support.hpp"

using namespace ssimrc;

TEST_CASE("ssim map of identical frames is exactly one") {
  const LumaFrame x = testutil::textured_frame(48, 40, 1);
  const SsimMap map = ssim_map(x, x);
  for (double v : map.values) {
    REQUIRE(v == 1.0);
  }
  REQUIRE(d_ssim_unit(map, {0, 0, 48, 40}) == 0.0);
}

TEST_CASE("ssim of constant black vs constant white") {
  const LumaFrame x = make_frame(32, 32, 0);
  const LumaFrame y = make_frame(32, 32, 255);
  const SsimMap map = ssim_map(x, y);
  // Variance terms cancel to 1; luminance term is C1 / (255^2 + C1).
  const double expected = kSsimC1 / (255.0 * 255.0 + kSsimC1);
  for (double v : map.values) {
    REQUIRE(v == Catch::Approx(expected).epsilon(1e-12));
  }
  REQUIRE(expected == Catch::Approx(9.9990e-5).margin(2e-9));
}

TEST_CASE("ssim map matches the scalar reference implementation") {
  SECTION("fixed 16x16 pattern with +10 offset") {
    const LumaFrame x = testutil::pattern_frame(
        16, 16, [](int px, int py) { return 40.0 + 10.0 * ((px * 3 + py * 5) % 13); });
    const LumaFrame y = testutil::add_offset(x, 10);
    const SsimMap map = ssim_map(x, y);
    for (int py = 0; py < 16; ++py) {
      for (int px = 0; px < 16; ++px) {
        REQUIRE(map.at(px, py) ==
                Catch::Approx(oracle::ssim_value_at(x, y, px, py)).margin(1e-12));
      }
    }
  }
  SECTION("textured content with noise distortion") {
    const LumaFrame x = testutil::textured_frame(40, 32, 77);
    const LumaFrame y = testutil::add_noise(x, 78, 12);
    const SsimMap map = ssim_map(x, y);
    for (int py = 0; py < 32; ++py) {
      for (int px = 0; px < 40; ++px) {
        REQUIRE(map.at(px, py) ==
                Catch::Approx(oracle::ssim_value_at(x, y, px, py)).margin(1e-12));
        // Centered-moment route: same algebra, looser float agreement.
        REQUIRE(map.at(px, py) ==
                Catch::Approx(oracle::ssim_value_at_centered(x, y, px, py)).margin(1e-9));
      }
    }
  }
}

TEST_CASE("ssim map is symmetric and thread-count invariant") {
  const LumaFrame x = testutil::textured_frame(64, 48, 5);
  const LumaFrame y = testutil::add_noise(x, 6, 20);
  const SsimMap ab = ssim_map(x, y);
  const SsimMap ba = ssim_map(y, x);
  const SsimMap ab4 = ssim_map(x, y, 4);
  for (size_t i = 0; i < ab.values.size(); ++i) {
    REQUIRE(ab.values[i] == ba.values[i]);
    REQUIRE(ab.values[i] == ab4.values[i]);
  }
}

TEST_CASE("ssim_map enforces matching dimensions") {
  const LumaFrame x = make_frame(32, 32, 10);
  const LumaFrame y = make_frame(32, 16, 10);
  REQUIRE_THROWS(ssim_map(x, y));
}

TEST_CASE("d_ssim_unit basics") {
  SsimMap map;
  map.width = 64;
  map.height = 64;
  map.values.assign(64 * 64, 1.0);
  REQUIRE(d_ssim_unit(map, {0, 0, 64, 64}) == 0.0);

  map.values.assign(64 * 64, 0.9);
  REQUIRE(d_ssim_unit(map, {0, 0, 64, 64}) == Catch::Approx(0.1).margin(1e-12));

  SsimMap small;
  small.width = 2;
  small.height = 2;
  small.values = {1.0, 0.8, 0.6, 0.6};
  REQUIRE(d_ssim_unit(small, {0, 0, 2, 2}) == Catch::Approx(0.25).margin(1e-15));

  REQUIRE_THROWS(d_ssim_unit(small, {0, 0, 0, 0}));
  REQUIRE_THROWS(d_ssim_unit(small, {1, 1, 2, 2}));
}

TEST_CASE("frame aggregation of CTU distortions") {
  SECTION("single CTU") {
    std::vector<DistortionRecord> recs = {{0.037, 0, 0, 4096}};
    REQUIRE(frame_d_ssim_from_ctus(recs, 4096) == Catch::Approx(0.037).margin(1e-15));
  }
  SECTION("equal weights") {
    std::vector<DistortionRecord> recs = {{0.02, 0, 0, 4096}, {0.04, 0, 0, 4096}};
    REQUIRE(frame_d_ssim_from_ctus(recs, 8192) == Catch::Approx(0.03).margin(1e-15));
  }
  SECTION("weighted mean") {
    std::vector<DistortionRecord> recs = {{0.03, 0, 0, 4096}, {0.06, 0, 0, 2048}};
    REQUIRE(frame_d_ssim_from_ctus(recs, 6144) == Catch::Approx(0.04).margin(1e-15));
  }
  SECTION("count mismatch is an error") {
    std::vector<DistortionRecord> recs = {{0.03, 0, 0, 4096}};
    REQUIRE_THROWS(frame_d_ssim_from_ctus(recs, 4097));
  }
}

TEST_CASE("whole-frame distortion equals the CTU-weighted aggregation") {
  const LumaFrame x = testutil::textured_frame(130, 66, 9);
  const LumaFrame y = testutil::add_noise(x, 10, 15);
  const SsimMap map = ssim_map(x, y);
  const CtuGrid grid = partition(130, 66, 64);

  std::vector<DistortionRecord> recs;
  for (size_t i = 0; i < grid.rects.size(); ++i) {
    recs.push_back({d_ssim_unit(map, grid.rects[i]), 0, 0, grid.pixel_counts[i]});
  }
  const double whole = d_ssim_unit(map, {0, 0, 130, 66});
  const double agg = frame_d_ssim_from_ctus(recs, 130 * 66);
  REQUIRE(whole == Catch::Approx(agg).margin(1e-12));
}

TEST_CASE("mse and psnr") {
  const LumaFrame x = testutil::textured_frame(32, 32, 3);
  REQUIRE(mse_unit(x, x, {0, 0, 32, 32}) == 0.0);
  REQUIRE(psnr_from_mse(0.0) == 99.99);

  const LumaFrame y = testutil::add_offset(testutil::pattern_frame(32, 32, [](int, int) {
                                             return 100.0;
                                           }),
                                           5);
  const LumaFrame base = testutil::pattern_frame(32, 32, [](int, int) { return 100.0; });
  REQUIRE(mse_unit(base, y, {0, 0, 32, 32}) == 25.0);

  REQUIRE(psnr_from_mse(65.025) == Catch::Approx(30.0).margin(1e-12));
}

TEST_CASE("satd basics") {
  SECTION("constant block has zero satd") {
    const LumaFrame f = make_frame(64, 64, 77);
    REQUIRE(satd_ctu(f, {0, 0, 64, 64}) == 0);
  }
  SECTION("all-zero region") {
    const LumaFrame f = make_frame(64, 64, 0);
    REQUIRE(satd_ctu(f, {0, 0, 64, 64}) == 0);
  }
  SECTION("single impulse at a sub-block corner gives 63*v") {
    for (int v : {1, 19, 200}) {
      LumaFrame f = make_frame(16, 16, 0);
      f.at(8, 8) = uint8_t(v);  // corner of the second diagonal sub-block
      REQUIRE(satd_ctu(f, {0, 0, 16, 16}) == 63 * v);
    }
  }
}

TEST_CASE("satd matches the explicit Hadamard matrix oracle") {
  SplitMix64 rng(100);
  for (int trial = 0; trial < 25; ++trial) {
    LumaFrame f = make_frame(8, 8);
    int32_t block[64];
    for (int i = 0; i < 64; ++i) {
      f.samples[i] = uint8_t(rng.below(256));
      block[i] = f.samples[i];
    }
    REQUIRE(satd_ctu(f, {0, 0, 8, 8}) == oracle::satd_block_8x8(block));
  }
}

TEST_CASE("satd shift and scale behavior") {
  const LumaFrame base = testutil::pattern_frame(
      64, 64, [](int x, int y) { return 20.0 + ((x * 7 + y * 3) % 31); });
  const int64_t s0 = satd_ctu(base, {0, 0, 64, 64});

  SECTION("adding a constant leaves satd unchanged (DC excluded)") {
    const LumaFrame shifted = testutil::add_offset(base, 40);
    REQUIRE(satd_ctu(shifted, {0, 0, 64, 64}) == s0);
  }
  SECTION("scaling scales satd linearly while unclamped") {
    LumaFrame scaled = base;
    for (size_t i = 0; i < scaled.samples.size(); ++i) {
      scaled.samples[i] = uint8_t(3 * base.samples[i]);  // max 3*50 < 256
    }
    REQUIRE(satd_ctu(scaled, {0, 0, 64, 64}) == 3 * s0);
  }
}

TEST_CASE("ctu variance is the population variance") {
  LumaFrame f = make_frame(16, 16, 10);
  REQUIRE(ctu_variance(f, {0, 0, 16, 16}) == 0.0);
  // Half 0, half 10: mean 5, variance 25.
  LumaFrame g = make_frame(16, 16, 0);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 8; ++x) g.at(x, y) = 10;
  }
  REQUIRE(ctu_variance(g, {0, 0, 16, 16}) == Catch::Approx(25.0).margin(1e-12));
}
