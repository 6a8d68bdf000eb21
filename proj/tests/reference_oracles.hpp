// Test-side reference implementations. These stay deliberately independent
// of the library code paths they check: direct scalar loops, explicit
// matrices, and dense searches instead of the shipped algorithms.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ssimrc/media.hpp"
#include "ssimrc/rd_models.hpp"

namespace oracle {

inline int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

inline std::array<double, 121> gaussian_weights_2d() {
  std::array<double, 121> w{};
  double sum = 0.0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      w[(dy + 5) * 11 + (dx + 5)] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

// Direct scalar evaluation of the SSIM map at one pixel with the
// raw-moment statistics; no separable convolution, no shared planes.
inline double ssim_value_at(const ssimrc::LumaFrame& x, const ssimrc::LumaFrame& y, int px,
                            int py) {
  static const std::array<double, 121> w = gaussian_weights_2d();
  const double c1 = 6.5025;
  const double c2 = 58.5225;
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const double weight = w[(dy + 5) * 11 + (dx + 5)];
      const double a = x.at(reflect(px + dx, x.width), reflect(py + dy, x.height));
      const double b = y.at(reflect(px + dx, y.width), reflect(py + dy, y.height));
      sx += weight * a;
      sy += weight * b;
      sxx += weight * a * a;
      syy += weight * b * b;
      sxy += weight * a * b;
    }
  }
  const double var_x = sxx - sx * sx;
  const double var_y = syy - sy * sy;
  const double cov = sxy - sx * sy;
  return ((2.0 * sx * sy + c1) * (2.0 * cov + c2)) /
         ((sx * sx + sy * sy + c1) * (var_x + var_y + c2));
}

// Same statistics through the centered-moment route; algebraically equal,
// numerically a second opinion.
inline double ssim_value_at_centered(const ssimrc::LumaFrame& x, const ssimrc::LumaFrame& y,
                                     int px, int py) {
  static const std::array<double, 121> w = gaussian_weights_2d();
  const double c1 = 6.5025;
  const double c2 = 58.5225;
  double mx = 0.0, my = 0.0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const double weight = w[(dy + 5) * 11 + (dx + 5)];
      mx += weight * x.at(reflect(px + dx, x.width), reflect(py + dy, x.height));
      my += weight * y.at(reflect(px + dx, y.width), reflect(py + dy, y.height));
    }
  }
  double var_x = 0.0, var_y = 0.0, cov = 0.0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const double weight = w[(dy + 5) * 11 + (dx + 5)];
      const double a = x.at(reflect(px + dx, x.width), reflect(py + dy, x.height)) - mx;
      const double b = y.at(reflect(px + dx, y.width), reflect(py + dy, y.height)) - my;
      var_x += weight * a * a;
      var_y += weight * b * b;
      cov += weight * a * b;
    }
  }
  return ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
         ((mx * mx + my * my + c1) * (var_x + var_y + c2));
}

// Explicit 8x8 Hadamard matrix built by Kronecker doubling.
inline std::array<std::array<int, 8>, 8> hadamard_matrix_8() {
  std::array<std::array<int, 8>, 8> h{};
  h[0][0] = 1;
  for (int size = 1; size < 8; size *= 2) {
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        h[i][j + size] = h[i][j];
        h[i + size][j] = h[i][j];
        h[i + size][j + size] = -h[i][j];
      }
    }
  }
  return h;
}

// SATD of one 8x8 block via full matrix products: H * B * H^T.
inline int64_t satd_block_8x8(const int32_t block[64]) {
  static const auto h = hadamard_matrix_8();
  int64_t tmp[8][8] = {};
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      int64_t acc = 0;
      for (int k = 0; k < 8; ++k) acc += int64_t(h[i][k]) * block[k * 8 + j];
      tmp[i][j] = acc;
    }
  }
  int64_t sum = 0;
  int64_t dc = 0;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      int64_t acc = 0;
      for (int k = 0; k < 8; ++k) acc += tmp[i][k] * int64_t(h[j][k]);
      if (i == 0 && j == 0) dc = std::abs(acc);
      sum += std::abs(acc);
    }
  }
  return sum - dc;
}

// Dense two-stage grid search over log lambda for the frame allocation.
struct GridAllocation {
  double lambda = 0.0;
  double total_bits = 0.0;
};

inline GridAllocation allocation_grid_search(const std::vector<ssimrc::HyperbolicRdParams>& models,
                                             const std::vector<int64_t>& counts, double r_c,
                                             int coarse = 4096, int fine = 4096) {
  auto total_at = [&](double log_lambda) {
    const double lambda = std::exp(log_lambda);
    double total = 0.0;
    for (size_t i = 0; i < models.size(); ++i) {
      const double bpp = std::min(
          8.0, std::max(0.005, ssimrc::bpp_from_lambda(models[i], lambda)));
      total += bpp * double(counts[i]);
    }
    return total;
  };
  const double lo = std::log(1e-6);
  const double hi = std::log(1e4);
  auto scan = [&](double a, double b, int steps) {
    double best_l = a;
    double best_gap = std::abs(total_at(a) - r_c);
    for (int i = 1; i <= steps; ++i) {
      const double l = a + (b - a) * double(i) / steps;
      const double gap = std::abs(total_at(l) - r_c);
      if (gap < best_gap) {
        best_gap = gap;
        best_l = l;
      }
    }
    return best_l;
  };
  const double coarse_best = scan(lo, hi, coarse);
  const double step = (hi - lo) / coarse;
  const double fine_best =
      scan(std::max(lo, coarse_best - 2 * step), std::min(hi, coarse_best + 2 * step), fine);
  return {std::exp(fine_best), total_at(fine_best)};
}

// Trapezoid quadrature for the BD checks against closed-form curves.
template <typename F>
double trapezoid(F&& f, double lo, double hi, int steps) {
  double sum = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < steps; ++i) {
    sum += f(lo + (hi - lo) * double(i) / steps);
  }
  return sum * (hi - lo) / steps;
}

}  // namespace oracle
