#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ssimrc/common.hpp"
#include "ssimrc/media.hpp"

namespace ssimrc {

// 11x11 Gaussian window, sigma 1.5, and the standard 8-bit constants.
constexpr int kSsimWindow = 11;
constexpr int kSsimRadius = kSsimWindow / 2;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 6.5025;    // (0.01*255)^2
constexpr double kSsimC2 = 58.5225;   // (0.03*255)^2
constexpr double kPsnrCapDb = 99.99;  // sentinel for zero MSE

struct SsimMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // per-pixel, row-major

  double at(int x, int y) const { return values[size_t(y) * width + x]; }
};

// d_ssim over one unit plus the classic side measurements.
struct DistortionRecord {
  double d_ssim = 0.0;
  double d_mse = 0.0;
  double satd = 0.0;
  int64_t pixel_count = 0;
};

namespace detail {

inline const std::array<double, kSsimWindow>& gaussian_kernel() {
  static const std::array<double, kSsimWindow> kernel = [] {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimRadius;
      k[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

// Symmetric reflection: ... 2 1 0 | 0 1 2 ... (edge sample duplicated).
inline int reflect_index(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - 1 - i;
  return i;
}

// Separable Gaussian blur with symmetric boundary handling. Row-parallel;
// every output element is an index-owned sequential sum, so the result is
// independent of the thread count.
inline void gaussian_blur(const std::vector<double>& src, std::vector<double>& tmp,
                          std::vector<double>& dst, int w, int h, int threads) {
  const auto& g = gaussian_kernel();
  parallel_for(h, threads, [&](int y) {
    const double* row = src.data() + size_t(y) * w;
    double* out = tmp.data() + size_t(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kSsimWindow; ++t) {
        acc += g[t] * row[reflect_index(x + t - kSsimRadius, w)];
      }
      out[x] = acc;
    }
  });
  parallel_for(h, threads, [&](int y) {
    double* out = dst.data() + size_t(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kSsimWindow; ++t) {
        acc += g[t] * tmp[size_t(reflect_index(y + t - kSsimRadius, h)) * w + x];
      }
      out[x] = acc;
    }
  });
}

inline std::atomic<int64_t>& ssim_eval_counter() {
  static std::atomic<int64_t> count{0};
  return count;
}

}  // namespace detail

// Number of SSIM map evaluations since process start. The encoding schemes
// sample it around the mode-decision loop to prove RDO never touches SSIM.
inline int64_t ssim_eval_count() {
  return detail::ssim_eval_counter().load(std::memory_order_relaxed);
}

inline SsimMap ssim_map(const LumaFrame& x, const LumaFrame& y, int threads = 1) {
  require(x.width == y.width && x.height == y.height, "ssim_map: dimension mismatch");
  detail::ssim_eval_counter().fetch_add(1, std::memory_order_relaxed);

  const int w = x.width;
  const int h = x.height;
  const size_t n = size_t(w) * h;
  std::vector<double> fx(n), fy(n), fxx(n), fyy(n), fxy(n);
  for (size_t i = 0; i < n; ++i) {
    const double a = x.samples[i];
    const double b = y.samples[i];
    fx[i] = a;
    fy[i] = b;
    fxx[i] = a * a;
    fyy[i] = b * b;
    fxy[i] = a * b;
  }
  std::vector<double> tmp(n);
  std::vector<double> mu_x(n), mu_y(n), m_xx(n), m_yy(n), m_xy(n);
  detail::gaussian_blur(fx, tmp, mu_x, w, h, threads);
  detail::gaussian_blur(fy, tmp, mu_y, w, h, threads);
  detail::gaussian_blur(fxx, tmp, m_xx, w, h, threads);
  detail::gaussian_blur(fyy, tmp, m_yy, w, h, threads);
  detail::gaussian_blur(fxy, tmp, m_xy, w, h, threads);

  SsimMap map;
  map.width = w;
  map.height = h;
  map.values.resize(n);
  parallel_for(h, threads, [&](int row) {
    for (int col = 0; col < w; ++col) {
      const size_t i = size_t(row) * w + col;
      const double mx = mu_x[i];
      const double my = mu_y[i];
      const double var_x = m_xx[i] - mx * mx;
      const double var_y = m_yy[i] - my * my;
      const double cov = m_xy[i] - mx * my;
      const double lum = (2.0 * mx * my + kSsimC1) / (mx * mx + my * my + kSsimC1);
      const double str = (2.0 * cov + kSsimC2) / (var_x + var_y + kSsimC2);
      map.values[i] = lum * str;
    }
  });
  return map;
}

// Eq.-(2)-style unit distortion: 1 - mean of the map over the region.
inline double d_ssim_unit(const SsimMap& map, const Rect& region) {
  require(!region.empty(), "d_ssim_unit: empty region");
  require(region.x >= 0 && region.y >= 0 && region.x + region.w <= map.width &&
              region.y + region.h <= map.height,
          "d_ssim_unit: region outside map");
  double sum = 0.0;
  for (int y = region.y; y < region.y + region.h; ++y) {
    const double* row = map.values.data() + size_t(y) * map.width;
    for (int x = region.x; x < region.x + region.w; ++x) {
      sum += row[x];
    }
  }
  return 1.0 - sum / double(region.area());
}

// Frame distortion as the pixel-count weighted mean of CTU distortions.
inline double frame_d_ssim_from_ctus(const std::vector<DistortionRecord>& records,
                                     int64_t m_frame) {
  int64_t total = 0;
  for (const auto& r : records) total += r.pixel_count;
  require(total == m_frame, "frame_d_ssim_from_ctus: pixel counts do not sum to frame size");
  double acc = 0.0;
  for (const auto& r : records) {
    acc += r.d_ssim * double(r.pixel_count);
  }
  return acc / double(m_frame);
}

inline int64_t sse_unit(const LumaFrame& x, const LumaFrame& y, const Rect& region) {
  require(x.width == y.width && x.height == y.height, "sse_unit: dimension mismatch");
  require(!region.empty(), "sse_unit: empty region");
  int64_t sse = 0;
  for (int yy = region.y; yy < region.y + region.h; ++yy) {
    for (int xx = region.x; xx < region.x + region.w; ++xx) {
      const int d = int(x.at(xx, yy)) - int(y.at(xx, yy));
      sse += int64_t(d) * d;
    }
  }
  return sse;
}

inline double mse_unit(const LumaFrame& x, const LumaFrame& y, const Rect& region) {
  return double(sse_unit(x, y, region)) / double(region.area());
}

inline double psnr_from_mse(double mse) {
  require(mse >= 0.0, "psnr: negative mse");
  if (mse == 0.0) {
    return kPsnrCapDb;
  }
  return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace detail {

// In-place unnormalized 8-point Hadamard butterflies over rows then columns.
inline void hadamard8x8(int32_t block[64]) {
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < 8; ++i) {
      int32_t* v = block + (pass == 0 ? i * 8 : i);
      const int stride = pass == 0 ? 1 : 8;
      int32_t a[8];
      for (int k = 0; k < 8; ++k) a[k] = v[k * stride];
      int32_t b[8];
      for (int k = 0; k < 4; ++k) {
        b[k] = a[k] + a[k + 4];
        b[k + 4] = a[k] - a[k + 4];
      }
      int32_t c[8];
      for (int half = 0; half < 8; half += 4) {
        for (int k = 0; k < 2; ++k) {
          c[half + k] = b[half + k] + b[half + k + 2];
          c[half + k + 2] = b[half + k] - b[half + k + 2];
        }
      }
      for (int half = 0; half < 8; half += 2) {
        a[half] = c[half] + c[half + 1];
        a[half + 1] = c[half] - c[half + 1];
      }
      for (int k = 0; k < 8; ++k) v[k * stride] = a[k];
    }
  }
}

}  // namespace detail

// SATD over the region: sum of |Hadamard coefficients| minus the DC term of
// each non-overlapped 8x8 sub-block. Partial edge sub-blocks are zero-padded.
inline int64_t satd_ctu(const LumaFrame& x, const Rect& region) {
  require(region.x >= 0 && region.y >= 0 && region.x + region.w <= x.width &&
              region.y + region.h <= x.height,
          "satd_ctu: region outside frame");
  int64_t total = 0;
  for (int by = region.y; by < region.y + region.h; by += 8) {
    for (int bx = region.x; bx < region.x + region.w; bx += 8) {
      int32_t block[64] = {0};
      const int bh = std::min(8, region.y + region.h - by);
      const int bw = std::min(8, region.x + region.w - bx);
      for (int yy = 0; yy < bh; ++yy) {
        for (int xx = 0; xx < bw; ++xx) {
          block[yy * 8 + xx] = x.at(bx + xx, by + yy);
        }
      }
      detail::hadamard8x8(block);
      int64_t sub = 0;
      for (int k = 0; k < 64; ++k) {
        sub += std::abs(block[k]);
      }
      sub -= std::abs(block[0]);
      total += sub;
    }
  }
  return total;
}

// Population variance of the region (Yeo's sigma^2). Integer sums keep it
// exact for 8-bit input.
inline double ctu_variance(const LumaFrame& x, const Rect& region) {
  require(!region.empty(), "ctu_variance: empty region");
  int64_t sum = 0;
  int64_t sum_sq = 0;
  for (int yy = region.y; yy < region.y + region.h; ++yy) {
    for (int xx = region.x; xx < region.x + region.w; ++xx) {
      const int v = x.at(xx, yy);
      sum += v;
      sum_sq += int64_t(v) * v;
    }
  }
  const double n = double(region.area());
  const double mean = double(sum) / n;
  return double(sum_sq) / n - mean * mean;
}

}  // namespace ssimrc
