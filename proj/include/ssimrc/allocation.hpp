#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ssimrc/common.hpp"
#include "ssimrc/rd_models.hpp"

namespace ssimrc {

constexpr double kBppMin = 0.005;
constexpr double kBppMax = 8.0;
constexpr double kLambdaSearchLo = 1e-6;
constexpr double kLambdaSearchHi = 1e4;
constexpr double kAllocationRelTol = 1e-3;
constexpr int kAllocationMaxIters = 100;
constexpr double kLambdaMseMin = 1e-4;
constexpr double kLambdaMseMax = 1e6;
constexpr int kMinBitsPerCtu = 16;

struct AllocationResult {
  double lambda_ssim_star = 0.0;
  std::vector<double> per_ctu_bits;
  std::vector<double> per_ctu_bpp;
  double achieved_total = 0.0;
  bool converged = false;
  bool clamped = false;  // target outside the reachable range at lambda bounds
};

namespace detail {

inline double clamped_bpp(const HyperbolicRdParams& m, double lambda) {
  return clamp_to(bpp_from_lambda(m, lambda), kBppMin, kBppMax);
}

inline double total_bits_at(const std::vector<HyperbolicRdParams>& models,
                            const std::vector<int64_t>& pixel_counts, double lambda) {
  double total = 0.0;
  for (size_t i = 0; i < models.size(); ++i) {
    total += clamped_bpp(models[i], lambda) * double(pixel_counts[i]);
  }
  return total;
}

}  // namespace detail

// Frame-level optimal bit allocation: one Lagrange multiplier shared by all
// CTUs, found by bisection on log lambda. Total bits are monotone
// non-increasing in lambda because every beta is negative.
inline AllocationResult solve_frame_allocation(const std::vector<HyperbolicRdParams>& models,
                                               const std::vector<int64_t>& pixel_counts,
                                               double r_c) {
  require(models.size() == pixel_counts.size(), "allocation: model/count size mismatch");
  require(!models.empty(), "allocation: no CTUs");
  require(r_c > 0.0, "allocation: target bits must be positive");
  for (const auto& m : models) {
    require(m.valid(), "allocation: invalid hyperbolic parameters");
  }

  double lo = std::log(kLambdaSearchLo);  // most bits
  double hi = std::log(kLambdaSearchHi);  // fewest bits
  const double total_lo = detail::total_bits_at(models, pixel_counts, std::exp(lo));
  const double total_hi = detail::total_bits_at(models, pixel_counts, std::exp(hi));

  AllocationResult res;
  double lambda = 0.0;
  if (r_c >= total_lo) {
    lambda = std::exp(lo);
    res.clamped = true;
  } else if (r_c <= total_hi) {
    lambda = std::exp(hi);
    res.clamped = true;
  } else {
    // Run past the bits tolerance until the lambda bracket itself is tight;
    // lambda* is then pinned to ~1e-6 relative, not just to whatever slack
    // the bits tolerance leaves.
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < kAllocationMaxIters; ++it) {
      mid = 0.5 * (lo + hi);
      const double total = detail::total_bits_at(models, pixel_counts, std::exp(mid));
      if (std::abs(total - r_c) / r_c <= kAllocationRelTol && hi - lo <= 1e-6) {
        break;
      }
      if (total > r_c) {
        lo = mid;  // spend fewer bits: raise lambda
      } else {
        hi = mid;
      }
    }
    lambda = std::exp(mid);
  }

  res.lambda_ssim_star = lambda;
  res.per_ctu_bpp.resize(models.size());
  res.per_ctu_bits.resize(models.size());
  double total = 0.0;
  for (size_t i = 0; i < models.size(); ++i) {
    res.per_ctu_bpp[i] = detail::clamped_bpp(models[i], lambda);
    res.per_ctu_bits[i] = res.per_ctu_bpp[i] * double(pixel_counts[i]);
    total += res.per_ctu_bits[i];
  }
  res.achieved_total = total;
  res.converged = std::abs(total - r_c) / r_c <= kAllocationRelTol;
  return res;
}

// lambda_MSE^new = (S / theta) * lambda_SSIM. Degenerate units (flat content
// or an unusable slope) fall back to the frame-average scale.
inline double dd_lambda_scale(double satd, const LinearDdParams& dd, double fallback_scale) {
  if (satd > 0.0 && dd.theta > 0.0) {
    return satd / dd.theta;
  }
  return fallback_scale;
}

inline double map_lambda(double lambda_ssim, double satd, const LinearDdParams& dd,
                         double fallback_scale = 1.0) {
  require(lambda_ssim > 0.0, "map_lambda: lambda_ssim must be positive");
  const double scale = dd_lambda_scale(satd, dd, fallback_scale);
  return clamp_to(lambda_ssim * scale, kLambdaMseMin, kLambdaMseMax);
}

// Inverse of the mapping, used by SOMR+ to recover the lambda_SSIM that a
// plain MSE-controlled encode corresponds to.
inline double lambda_ssim_from_mse(double lambda_mse, double satd, const LinearDdParams& dd,
                                   double fallback_scale = 1.0) {
  require(lambda_mse > 0.0, "lambda_ssim_from_mse: lambda must be positive");
  const double scale = dd_lambda_scale(satd, dd, fallback_scale);
  return lambda_mse / scale;
}

// Frame-average S/theta over the units where the mapping is well defined.
inline double frame_fallback_scale(const std::vector<double>& satds,
                                   const std::vector<LinearDdParams>& dds) {
  require(satds.size() == dds.size(), "fallback scale: size mismatch");
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < satds.size(); ++i) {
    if (satds[i] > 0.0 && dds[i].theta > 0.0) {
      sum += satds[i] / dds[i].theta;
      ++count;
    }
  }
  return count > 0 ? sum / count : 1.0;
}

}  // namespace ssimrc
