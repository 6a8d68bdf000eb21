#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ssimrc/allocation.hpp"
#include "ssimrc/common.hpp"
#include "ssimrc/rd_models.hpp"

namespace ssimrc {

// Update-rate constants. Only the LMS pair is fixed by construction at 0.01;
// the regression rates follow the HM convention the R-lambda update is
// drawn from.
struct UpdateRates {
  double delta_c = 0.1;
  double delta_k = 0.05;
  double delta_alpha = 0.1;
  double delta_beta = 0.05;
  double delta_theta = 0.01;
  double delta_eta = 0.01;
};

struct CtuParams {
  HyperbolicRdParams rd;
  RLambdaMseParams rl;
  LinearDdParams dd;
  double satd = 0.0;  // last observed content complexity
};

struct CtuParamStore {
  std::vector<CtuParams> ctus;
  UpdateRates rates;
};

// Log-residual regression step for the R-lambda_MSE model.
inline RLambdaMseParams update_r_lambda_regression(const RLambdaMseParams& p,
                                                   const UpdateRates& rates,
                                                   double lambda_mse_used, double bpp_actual) {
  require(lambda_mse_used > 0.0 && bpp_actual > 0.0, "r-lambda update: non-positive inputs");
  const double residual =
      std::log(lambda_mse_used) - std::log(lambda_mse_from_bpp(p, bpp_actual));
  RLambdaMseParams out;
  out.c = clamp_to(p.c + rates.delta_c * residual * p.c, kCMin, kCMax);
  out.k = clamp_to(p.k + rates.delta_k * residual * std::log(bpp_actual), kBetaMin, kBetaMax);
  return out;
}

// Same regression shape for the hyperbolic R-D_SSIM model. A clipped
// zero-distortion sample carries no information and is skipped.
inline HyperbolicRdParams update_rd_ssim_regression(const HyperbolicRdParams& p,
                                                    const UpdateRates& rates,
                                                    double d_ssim_actual, double bpp_actual) {
  require(bpp_actual > 0.0, "rd-ssim update: non-positive bpp");
  if (d_ssim_actual <= 0.0) {
    return p;
  }
  const double residual = std::log(d_ssim_actual) - std::log(hyperbolic_d(p, bpp_actual));
  HyperbolicRdParams out;
  out.alpha = clamp_to(p.alpha + rates.delta_alpha * residual * p.alpha, kAlphaMin, kAlphaMax);
  out.beta =
      clamp_to(p.beta + rates.delta_beta * residual * std::log(bpp_actual), kBetaMin, kBetaMax);
  return out;
}

// The joint R-D_SSIM-lambda_SSIM solve: with one encoded observation the two
// hyperbolic parameters are determined exactly. After clamping beta, alpha is
// recomputed so the model still interpolates the observed point.
inline std::optional<HyperbolicRdParams> joint_solve_lambda_ssim(double d_ssim_actual,
                                                                 double bpp_actual,
                                                                 double lambda_ssim) {
  require(bpp_actual > 0.0 && lambda_ssim > 0.0, "joint solve: non-positive inputs");
  if (d_ssim_actual <= 0.0) {
    return std::nullopt;
  }
  HyperbolicRdParams out;
  const double beta = -lambda_ssim * bpp_actual / d_ssim_actual;
  out.beta = clamp_to(beta, kBetaMin, kBetaMax);
  out.alpha = clamp_to(d_ssim_actual / std::pow(bpp_actual, out.beta), kAlphaMin, kAlphaMax);
  return out;
}

inline std::optional<HyperbolicRdParams> joint_solve(double d_ssim_actual, double bpp_actual,
                                                     double lambda_mse_new_used, double satd,
                                                     double theta) {
  require(satd > 0.0 && theta > 0.0, "joint solve: degenerate satd/theta");
  return joint_solve_lambda_ssim(d_ssim_actual, bpp_actual,
                                 lambda_mse_new_used * theta / satd);
}

// Joint solve with memory. The coarse mode grid of the toy codec makes the
// raw one-observation solve jump between staircase neighbors, which sets off
// a frame-level allocation limit cycle; geometric blending toward the solved
// parameters turns the model into a short EMA over recent operating points
// and damps the loop. blend = 1 is the raw solve.
inline std::optional<HyperbolicRdParams> damped_joint_solve(const HyperbolicRdParams& prev,
                                                            double d_ssim_actual,
                                                            double bpp_actual,
                                                            double lambda_ssim, double blend) {
  const auto solved = joint_solve_lambda_ssim(d_ssim_actual, bpp_actual, lambda_ssim);
  if (!solved) {
    return std::nullopt;
  }
  if (blend >= 1.0) {
    return solved;
  }
  HyperbolicRdParams out;
  out.beta = clamp_to((1.0 - blend) * prev.beta + blend * solved->beta, kBetaMin, kBetaMax);
  // Alpha is re-pinned so the damped model still interpolates the latest
  // observation and the next allocation books reachable rates.
  out.alpha =
      clamp_to(d_ssim_actual / std::pow(bpp_actual, out.beta), kAlphaMin, kAlphaMax);
  return out;
}

// Adaptive LMS step for the per-CTU D_SSIM-D_MSE line.
inline LinearDdParams update_linear_dd_lms(const LinearDdParams& p, const UpdateRates& rates,
                                           double d_ssim_actual, double d_mse_actual,
                                           double satd) {
  require(satd > 0.0, "dd lms update: satd must be positive");
  // Single predicted value so a zero-residual sample cancels exactly.
  const double predicted = p.theta * d_mse_actual / satd + p.eta;
  const double residual = d_ssim_actual - predicted;
  LinearDdParams out;
  out.theta = std::max(kThetaMin, p.theta + rates.delta_theta * residual * d_mse_actual);
  out.eta = p.eta + rates.delta_eta * residual;
  return out;
}

struct BootstrapObservation {
  int64_t bits = 0;
  double d_ssim = 0.0;
  double d_mse = 0.0;
  double satd = 0.0;
  int64_t pixel_count = 0;
  // Operational MSE-domain slope -dD_MSE/dR measured around the bootstrap
  // operating point (a qp +-2 finite difference). <= 0 when degenerate.
  double lambda_op = 0.0;
};

// Builds the per-CTU parameter store from the bootstrap frame: theta from
// S*D_SSIM/D_MSE with eta 0, one joint solve against the bootstrap lambda to
// seed the hyperbolic parameters, and the R-lambda model seeded through the
// same lambda at the observed rate. lambda_mse_fallback stands in where the
// measured per-CTU slope is degenerate.
inline CtuParamStore init_params(const std::vector<BootstrapObservation>& obs,
                                 double lambda_mse_fallback,
                                 const UpdateRates& rates = UpdateRates{}) {
  require(!obs.empty(), "init_params: no observations");
  CtuParamStore store;
  store.rates = rates;
  store.ctus.resize(obs.size());

  double theta_sum = 0.0;
  int theta_count = 0;
  for (size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].d_mse > 0.0 && obs[i].satd > 0.0) {
      const double theta = obs[i].satd * obs[i].d_ssim / obs[i].d_mse;
      if (theta > 0.0 && std::isfinite(theta)) {
        store.ctus[i].dd.theta = std::max(kThetaMin, theta);
        theta_sum += store.ctus[i].dd.theta;
        ++theta_count;
        continue;
      }
    }
    store.ctus[i].dd.theta = -1.0;  // fill from frame average below
  }
  const double theta_avg = theta_count > 0 ? theta_sum / theta_count : 1.0;

  for (size_t i = 0; i < obs.size(); ++i) {
    CtuParams& p = store.ctus[i];
    if (p.dd.theta < 0.0) {
      p.dd.theta = std::max(kThetaMin, theta_avg);
    }
    p.dd.eta = 0.0;
    p.satd = obs[i].satd;
    p.rl = RLambdaMseParams{};  // c=10, k=-1
    p.rd = HyperbolicRdParams{0.1, -1.0};
    const double lambda_boot =
        obs[i].lambda_op > 0.0 ? obs[i].lambda_op : lambda_mse_fallback;
    if (obs[i].pixel_count > 0 && obs[i].bits > 0 && lambda_boot > 0.0) {
      const double bpp = double(obs[i].bits) / double(obs[i].pixel_count);
      // Pass the R-lambda curve through (bpp, lambda_boot) keeping k = -1.
      p.rl.c = clamp_to(lambda_boot * bpp, kCMin, kCMax);
      if (obs[i].satd > 0.0) {
        const double lambda_ssim = lambda_boot * p.dd.theta / obs[i].satd;
        if (lambda_ssim > 0.0) {
          if (auto refined = joint_solve_lambda_ssim(obs[i].d_ssim, bpp, lambda_ssim)) {
            p.rd = *refined;
          }
        }
      }
    }
  }
  return store;
}

}  // namespace ssimrc
