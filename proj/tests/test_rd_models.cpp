#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ssimrc/rd_models.hpp"

using namespace ssimrc;

TEST_CASE("hyperbolic model evaluation") {
  REQUIRE(hyperbolic_d({0.5, -1.0}, 1.0) == 0.5);
  REQUIRE(hyperbolic_d({0.5, -1.0}, 2.0) == Catch::Approx(0.25).margin(1e-15));
  // Independent route: alpha * exp(beta * ln bpp).
  const double expected = 0.02 * std::exp(-1.2 * std::log(0.5));
  REQUIRE(hyperbolic_d({0.02, -1.2}, 0.5) == Catch::Approx(expected).margin(1e-15));
  REQUIRE(expected == Catch::Approx(0.045948).margin(1e-6));
  REQUIRE_THROWS(hyperbolic_d({0.5, -1.0}, 0.0));
}

TEST_CASE("lambda relations and round trip") {
  REQUIRE(lambda_from_bpp({0.5, -1.0}, 1.0) == 0.5);
  const HyperbolicRdParams p{0.02, -1.2};
  for (double b : {0.01, 0.1, 1.0, 5.0}) {
    const double rt = bpp_from_lambda(p, lambda_from_bpp(p, b));
    REQUIRE(rt == Catch::Approx(b).margin(1e-12));
  }
  // lambda 0.05: bpp = (0.05 / 0.024)^(1/-2.2), evaluated independently.
  const double expected = std::exp(std::log(0.05 / 0.024) / -2.2);
  REQUIRE(bpp_from_lambda(p, 0.05) == Catch::Approx(expected).margin(1e-15));
  REQUIRE(expected == Catch::Approx(0.7163242).margin(1e-6));
}

TEST_CASE("lambda is the negative derivative of the hyperbolic model") {
  const HyperbolicRdParams p{0.04, -1.35};
  for (double b : {0.05, 0.5, 2.0}) {
    const double h = 1e-4 * b;
    const double deriv = (hyperbolic_d(p, b + h) - hyperbolic_d(p, b - h)) / (2.0 * h);
    REQUIRE(lambda_from_bpp(p, b) == Catch::Approx(-deriv).epsilon(1e-6));
  }
}

TEST_CASE("model monotonicity in bpp") {
  const HyperbolicRdParams p{0.1, -0.8};
  double prev_d = hyperbolic_d(p, 0.01);
  double prev_l = lambda_from_bpp(p, 0.01);
  for (double b = 0.02; b < 6.0; b *= 1.5) {
    const double d = hyperbolic_d(p, b);
    const double l = lambda_from_bpp(p, b);
    REQUIRE(d < prev_d);
    REQUIRE(l < prev_l);
    prev_d = d;
    prev_l = l;
  }
}

TEST_CASE("R-lambda_MSE model") {
  REQUIRE(lambda_mse_from_bpp({10.0, -1.0}, 1.0) == 10.0);
  REQUIRE(lambda_mse_from_bpp({10.0, -1.0}, 0.5) == Catch::Approx(20.0).margin(1e-12));
  const double expected = 3.2 * std::exp(-1.4 * std::log(0.25));
  REQUIRE(lambda_mse_from_bpp({3.2, -1.4}, 0.25) == Catch::Approx(expected).margin(1e-15));
  REQUIRE(expected == Catch::Approx(22.286).margin(1e-3));
}

TEST_CASE("D-D model predictions") {
  SECTION("zero distortion limits") {
    REQUIRE(dd_yeo_excess(0.0, 100.0) == 0.0);
    REQUIRE(dd_linear(0.0, 20000.0, 400.0, 0.001) == 0.001);
  }
  SECTION("local model arithmetic") {
    REQUIRE(dd_linear(50.0, 20000.0, 400.0, 0.001) == Catch::Approx(1.001).margin(1e-15));
  }
  SECTION("yeo arithmetic") {
    REQUIRE(dd_yeo_excess(201.0, 100.0, 1.0) == Catch::Approx(1.0).margin(1e-15));
  }
  SECTION("flat units are flagged degenerate") {
    REQUIRE_THROWS(dd_linear(50.0, 0.0, 400.0, 0.0));
  }
}

TEST_CASE("pearson correlation") {
  SECTION("perfect linearity") {
    const std::vector<double> xs = {1, 2, 3, 4, 5};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2.0 * x + 1.0);
    REQUIRE(pcc(xs, ys) == Catch::Approx(1.0).margin(1e-12));
    std::vector<double> neg;
    for (double x : xs) neg.push_back(-x);
    REQUIRE(pcc(xs, neg) == Catch::Approx(-1.0).margin(1e-12));
  }
  SECTION("hand-computed example") {
    // xs={1,2,3,4}, ys={1,3,2,5}: covariance parts sum to 5.5,
    // sum squares 5 and 8.75 -> r = 5.5 / sqrt(43.75).
    const double expected = 5.5 / std::sqrt(43.75);
    REQUIRE(pcc({1, 2, 3, 4}, {1, 3, 2, 5}) == Catch::Approx(expected).margin(1e-12));
  }
  SECTION("degenerate inputs") {
    REQUIRE_THROWS(pcc({1, 2}, {1, 2}));
    REQUIRE_THROWS(pcc({1, 1, 1}, {1, 2, 3}));
  }
}

TEST_CASE("hyperbolic fit recovers exact model data") {
  const HyperbolicRdParams truth{0.04, -1.1};
  std::vector<RdPoint> points;
  for (double b : {0.1, 0.4, 1.2, 3.0}) {
    points.push_back({b, hyperbolic_d(truth, b)});
  }
  const HyperbolicFit fit = fit_hyperbolic_4pt(points);
  REQUIRE(fit.params.alpha == Catch::Approx(truth.alpha).epsilon(1e-10));
  REQUIRE(fit.params.beta == Catch::Approx(truth.beta).epsilon(1e-10));
  REQUIRE(fit.correlation == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(fit.points_used == 4);
}

TEST_CASE("two points interpolate exactly") {
  const std::vector<RdPoint> points = {{0.2, 0.08}, {1.5, 0.01}};
  const HyperbolicFit fit = fit_hyperbolic_4pt(points);
  REQUIRE(hyperbolic_d(fit.params, 0.2) == Catch::Approx(0.08).epsilon(1e-12));
  REQUIRE(hyperbolic_d(fit.params, 1.5) == Catch::Approx(0.01).epsilon(1e-12));
  REQUIRE(fit.correlation == 1.0);
}

TEST_CASE("fit tolerates multiplicative noise") {
  const HyperbolicRdParams truth{0.04, -1.1};
  SplitMix64 rng(20240803);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RdPoint> points;
    for (double b : {0.15, 0.5, 1.4, 3.5}) {
      const double noise = 1.0 + rng.uniform(-0.05, 0.05);
      points.push_back({b, hyperbolic_d(truth, b) * noise});
    }
    const HyperbolicFit fit = fit_hyperbolic_4pt(points);
    REQUIRE(std::abs(fit.params.beta - truth.beta) < 0.3);
    REQUIRE(fit.correlation > 0.95);
  }
}

TEST_CASE("fit excludes non-positive distortion points") {
  std::vector<RdPoint> points = {{0.2, 0.08}, {0.8, 0.0}, {1.5, 0.01}};
  const HyperbolicFit fit = fit_hyperbolic_4pt(points);
  REQUIRE(fit.points_used == 2);
  REQUIRE_THROWS(fit_hyperbolic_4pt({{0.2, 0.0}, {0.8, -0.1}, {1.5, 0.01}}));
}

TEST_CASE("prediction error") {
  REQUIRE(prediction_error(0.05, 0.05) == 0.0);
  REQUIRE(prediction_error(0.02, 0.03) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(prediction_error(0.05, 0.0465) == Catch::Approx(0.07).margin(1e-12));
  REQUIRE_THROWS(prediction_error(0.0, 0.01));
}
