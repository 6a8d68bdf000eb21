#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ssimrc/common.hpp"

namespace ssimrc {

// Shared clamp ranges. The exponents must stay strictly negative so the
// R-lambda relations remain invertible and allocation stays monotone.
constexpr double kBetaMin = -3.0;
constexpr double kBetaMax = -0.01;
constexpr double kAlphaMin = 1e-8;
constexpr double kAlphaMax = 1e4;
constexpr double kCMin = 1e-3;
constexpr double kCMax = 1e4;
constexpr double kThetaMin = 1e-6;
constexpr double kYeoEpsilon = 1.0;

// D_SSIM = alpha * bpp^beta
struct HyperbolicRdParams {
  double alpha = 0.1;
  double beta = -1.0;

  bool valid() const {
    return alpha > 0.0 && beta >= kBetaMin && beta <= kBetaMax && std::isfinite(alpha);
  }
};

// lambda_MSE = c * bpp^k (the HM-style R-lambda control model)
struct RLambdaMseParams {
  double c = 10.0;
  double k = -1.0;
};

// D_SSIM = theta * D_MSE / S + eta, per CTU
struct LinearDdParams {
  double theta = 1.0;
  double eta = 0.0;
};

inline double hyperbolic_d(const HyperbolicRdParams& p, double bpp) {
  require(bpp > 0.0, "hyperbolic_d: bpp must be positive");
  return p.alpha * std::pow(bpp, p.beta);
}

// Negative derivative of the hyperbolic model: the R-lambda_SSIM relation.
inline double lambda_from_bpp(const HyperbolicRdParams& p, double bpp) {
  require(bpp > 0.0, "lambda_from_bpp: bpp must be positive");
  return -p.alpha * p.beta * std::pow(bpp, p.beta - 1.0);
}

inline double bpp_from_lambda(const HyperbolicRdParams& p, double lambda_ssim) {
  require(lambda_ssim > 0.0, "bpp_from_lambda: lambda must be positive");
  return std::pow(lambda_ssim / (-p.alpha * p.beta), 1.0 / (p.beta - 1.0));
}

inline double lambda_mse_from_bpp(const RLambdaMseParams& p, double bpp) {
  require(bpp > 0.0, "lambda_mse_from_bpp: bpp must be positive");
  return p.c * std::pow(bpp, p.k);
}

// Yeo's variance-normalized mapping, expressed as the distortion excess
// (1/SSIM - 1) so it can sit next to the 1-SSIM numbers in reports.
inline double dd_yeo_excess(double d_mse, double sigma2, double eps = kYeoEpsilon) {
  require(d_mse >= 0.0 && sigma2 >= 0.0, "dd_yeo: negative input");
  return d_mse / (2.0 * sigma2 + eps);
}

// SATD-normalized linear mapping; serves both the global and per-CTU forms.
inline double dd_linear(double d_mse, double satd, double theta, double eta) {
  require(d_mse >= 0.0, "dd_linear: negative d_mse");
  require(satd > 0.0, "dd_linear: satd must be positive (degenerate flat unit)");
  return theta * d_mse / satd + eta;
}

inline double pcc(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), "pcc: length mismatch");
  require(xs.size() >= 3, "pcc: need at least 3 points");
  const double n = double(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  require(sxx > 0.0 && syy > 0.0, "pcc: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

struct RdPoint {
  double bpp = 0.0;
  double d_ssim = 0.0;
};

struct HyperbolicFit {
  HyperbolicRdParams params;
  double correlation = 0.0;  // between actual and model-predicted d_ssim
  int points_used = 0;
};

// Least-squares line in (log bpp, log d_ssim): slope = beta, intercept =
// log alpha. Non-positive distortion samples are excluded.
inline HyperbolicFit fit_hyperbolic_4pt(const std::vector<RdPoint>& points) {
  std::vector<double> lx, ly, bpp, d;
  for (const auto& p : points) {
    if (p.bpp > 0.0 && p.d_ssim > 0.0) {
      lx.push_back(std::log(p.bpp));
      ly.push_back(std::log(p.d_ssim));
      bpp.push_back(p.bpp);
      d.push_back(p.d_ssim);
    }
  }
  require(lx.size() >= 2, "fit_hyperbolic: need at least 2 positive points");
  const double n = double(lx.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0.0, "fit_hyperbolic: all bpp identical");

  HyperbolicFit fit;
  fit.points_used = int(lx.size());
  const double beta = sxy / sxx;
  fit.params.beta = clamp_to(beta, kBetaMin, kBetaMax);
  fit.params.alpha = std::exp(my - fit.params.beta * mx);

  if (lx.size() == 2) {
    fit.correlation = 1.0;  // exact interpolation
    return fit;
  }
  std::vector<double> predicted(d.size());
  for (size_t i = 0; i < d.size(); ++i) {
    predicted[i] = hyperbolic_d(fit.params, bpp[i]);
  }
  fit.correlation = pcc(d, predicted);
  return fit;
}

// Relative prediction error, Eq.-(24) style. Callers exclude zero-distortion
// samples from averages.
inline double prediction_error(double d_ssim_actual, double d_ssim_predicted) {
  require(d_ssim_actual > 0.0, "prediction_error: actual distortion must be positive");
  return std::abs(d_ssim_actual - d_ssim_predicted) / d_ssim_actual;
}

}  // namespace ssimrc
