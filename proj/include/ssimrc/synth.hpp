#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ssimrc/common.hpp"
#include "ssimrc/media.hpp"

namespace ssimrc {

// Deterministic procedural test sequences. Content drifts slowly so
// collocated CTUs stay similar from frame to frame, and every kind mixes
// flat, textured, and structured regions to give the allocators something
// to trade.

namespace synth_detail {

// Periodic value-noise lattice with smoothstep interpolation.
struct ValueNoise {
  int period = 64;
  std::vector<double> lattice;

  ValueNoise(uint64_t seed, int period_) : period(period_) {
    SplitMix64 rng(seed);
    lattice.resize(size_t(period) * period);
    for (double& v : lattice) {
      v = rng.uniform();
    }
  }

  double lattice_at(int ix, int iy) const {
    ix %= period;
    iy %= period;
    if (ix < 0) ix += period;
    if (iy < 0) iy += period;
    return lattice[size_t(iy) * period + ix];
  }

  double sample(double x, double y) const {
    const int ix = int(std::floor(x));
    const int iy = int(std::floor(y));
    const double fx = x - ix;
    const double fy = y - iy;
    const double sx = fx * fx * (3.0 - 2.0 * fx);
    const double sy = fy * fy * (3.0 - 2.0 * fy);
    const double v00 = lattice_at(ix, iy);
    const double v10 = lattice_at(ix + 1, iy);
    const double v01 = lattice_at(ix, iy + 1);
    const double v11 = lattice_at(ix + 1, iy + 1);
    const double a = v00 + (v10 - v00) * sx;
    const double b = v01 + (v11 - v01) * sx;
    return a + (b - a) * sy;
  }

  // Fractal sum, zero-centered in roughly [-1, 1].
  double fbm(double x, double y, int octaves) const {
    double value = 0.0;
    double amp = 1.0;
    double norm = 0.0;
    double fx = x;
    double fy = y;
    for (int o = 0; o < octaves; ++o) {
      value += amp * (sample(fx, fy) - 0.5) * 2.0;
      norm += amp;
      amp *= 0.5;
      fx *= 2.0;
      fy *= 2.0;
    }
    return value / norm;
  }
};

inline uint8_t to_sample(double v) {
  return uint8_t(std::clamp(std::lround(v), 0l, 255l));
}

}  // namespace synth_detail

enum class SynthKind { Gradient, Waves, Noise, Checker, Mixed };

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "gradient") return SynthKind::Gradient;
  if (s == "waves") return SynthKind::Waves;
  if (s == "noise") return SynthKind::Noise;
  if (s == "checker") return SynthKind::Checker;
  if (s == "mixed") return SynthKind::Mixed;
  throw std::invalid_argument("unknown synth kind: " + s +
                              " (want gradient|waves|noise|checker|mixed)");
}

inline const std::vector<std::string>& synth_kind_names() {
  static const std::vector<std::string> names = {"gradient", "waves", "noise", "checker",
                                                 "mixed"};
  return names;
}

namespace synth_detail {

// t is the frame index scaled by the sequence speed; 1.0 approximates the
// inter-frame change of ordinary 30 fps footage.
inline double field_value(SynthKind kind, const ValueNoise& vn, const ValueNoise& envn,
                          double x, double y, double t, int width, int height) {
  // Slow pan, roughly what consecutive frames of 30 fps footage move.
  const double drift_x = 0.09 * t;
  const double drift_y = 0.045 * t;
  const double u = x + drift_x;
  const double v = y + drift_y;
  switch (kind) {
    case SynthKind::Gradient: {
      // Conference-style class: smooth ramps, a sharp-edged moving disc and
      // static textured panels of uneven strength over a quiet background.
      double val = 100.0 + 58.0 * (u / width) + 28.0 * std::sin(2.0 * M_PI * v / (1.7 * height));
      const double cx = width * 0.5 + 0.15 * width * std::sin(0.008 * t);
      const double cy = height * 0.5 + 0.15 * height * std::cos(0.0065 * t);
      const double r = std::hypot(x - cx, y - cy);
      val += 52.0 * std::tanh((34.0 - r) / 2.0) * 0.5;  // hard-edged disc
      const double panel = std::max(0.0, envn.fbm(x / 120.0 + 7.0, y / 120.0 + 3.0, 1));
      val += 34.0 * panel * vn.fbm(x / 3.4, y / 3.4, 2);
      val += 2.5 * vn.fbm(x / 2.8 + 57.0, y / 2.8 + 91.0, 1);
      return val;
    }
    case SynthKind::Waves: {
      double val = 128.0;
      val += 38.0 * std::sin(2.0 * M_PI * (u * 0.031 + v * 0.017) + 0.017 * t);
      val += 26.0 * std::sin(2.0 * M_PI * (u * 0.009 - v * 0.043) - 0.011 * t);
      val += 18.0 * std::sin(2.0 * M_PI * std::hypot(x - width * 0.4, y - height * 0.6) * 0.022 -
                             0.028 * t);
      // Strong amplitude envelope: calm water in some regions, hard ripple
      // in others, plus a slow luminance ramp underneath.
      const double e = 0.5 + 0.5 * envn.fbm(x / 95.0, y / 95.0, 2);
      const double env = 0.06 + 1.1 * e * e;
      return 112.0 + 30.0 * (u / width) + (val - 128.0) * env;
    }
    case SynthKind::Noise: {
      // Static correlated grain under a drifting coarse structure. The
      // grain is anchored to the pixel grid so it never "breathes" between
      // frames the way interpolated moving noise does; its energy varies
      // strongly from region to region.
      const double e = 0.5 + 0.5 * envn.fbm(x / 140.0, y / 140.0, 2);
      const double amp = 2.0 + 44.0 * e * e * e;
      double val = 110.0 + 36.0 * (y / double(height));
      val += amp * vn.fbm(x / 2.6, y / 2.6, 2);
      val += 0.8 * amp * vn.fbm(u / 13.0 + 31.0, v / 13.0 + 17.0, 2);
      return val;
    }
    case SynthKind::Checker: {
      // Block size and contrast both vary across the frame; faint regions
      // approach a plain ramp.
      const double e = 0.5 + 0.5 * envn.fbm(x / 130.0, y / 130.0, 1);
      const double scale = 6.0 + 22.0 * e;
      const double contrast = 0.08 + 0.92 * (0.5 + 0.5 * envn.fbm(x / 105.0 + 43.0,
                                                                  y / 105.0 + 77.0, 1));
      const double cu = u / scale;
      const double cv = v / scale;
      const double sq = std::sin(M_PI * cu) * std::sin(M_PI * cv);
      const double edge = std::tanh(4.0 * sq);
      double val = 118.0 + 20.0 * (v / height) + 66.0 * contrast * edge;
      val += 4.0 * vn.fbm(x / 4.0 + 11.0, y / 4.0 + 23.0, 1);
      return val;
    }
    case SynthKind::Mixed: {
      const bool left = x < width / 2;
      const bool top = y < height / 2;
      if (left && top) return field_value(SynthKind::Gradient, vn, envn, x, y, t, width, height);
      if (!left && top) return field_value(SynthKind::Waves, vn, envn, x, y, t, width, height);
      if (left) return field_value(SynthKind::Noise, vn, envn, x, y, t, width, height);
      double val = field_value(SynthKind::Checker, vn, envn, x, y, t, width, height);
      // A slow-moving vertical bar adds a hard structural edge.
      const double bar = width * 0.75 + 0.2 * width * std::sin(0.02 * t);
      if (std::abs(x - bar) < 4.0) val = 235.0;
      return val;
    }
  }
  return 128.0;
}

}  // namespace synth_detail

inline std::vector<LumaFrame> synth_sequence(SynthKind kind, int width, int height,
                                             int frame_count, uint64_t seed_salt = 0,
                                             double speed = 1.0) {
  require(width >= 16 && height >= 16, "synth: frames must be at least 16x16");
  require(frame_count >= 1, "synth: need at least one frame");
  require(speed >= 0.0, "synth: speed must be non-negative");
  const uint64_t base = fnv1a_hash(synth_kind_names()[size_t(kind)]) ^ seed_salt;
  const synth_detail::ValueNoise vn(base ^ 0x51ed2700ull, 97);
  const synth_detail::ValueNoise envn(base ^ 0x0badc0deull, 53);

  std::vector<LumaFrame> frames;
  frames.reserve(size_t(frame_count));
  for (int t = 0; t < frame_count; ++t) {
    LumaFrame f = make_frame(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double v = synth_detail::field_value(kind, vn, envn, double(x), double(y),
                                                   speed * t, width, height);
        f.at(x, y) = synth_detail::to_sample(v);
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

inline std::vector<LumaFrame> synth_sequence(const std::string& kind, int width, int height,
                                             int frame_count, uint64_t seed_salt = 0,
                                             double speed = 1.0) {
  return synth_sequence(parse_synth_kind(kind), width, height, frame_count, seed_salt, speed);
}

}  // namespace ssimrc
