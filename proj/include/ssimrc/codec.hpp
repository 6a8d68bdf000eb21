#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ssimrc/common.hpp"
#include "ssimrc/media.hpp"
#include "ssimrc/metrics.hpp"

namespace ssimrc {

// One point of the codec's mode space: quantizer plus transform size.
struct CodingMode {
  int qp = 32;               // [0, 51]
  int transform_size = 8;    // 8 or 16

  bool operator==(const CodingMode&) const = default;
};

inline double qp_step(int qp) {
  return std::exp2((qp - 4) / 6.0);
}

struct CostSpec {
  enum class Metric { MseCost, MappedSsimCost };
  Metric metric = Metric::MseCost;
  double lambda = 0.0;  // lambda_MSE, or lambda_MSE^new for MappedSsimCost
};

struct EncodeOutcome {
  CodingMode mode;
  int64_t bits = 0;               // exact payload bit count, header included
  std::vector<uint8_t> recon;     // w*h CTU-local samples
  std::vector<uint8_t> payload;   // byte-padded bitstream
  int64_t sse = 0;
  double d_mse = 0.0;             // sse / M
  double bpp = 0.0;               // bits / M
};

namespace detail {

class BitWriter {
 public:
  void put_bit(int b) {
    if (used_ == 0) {
      bytes_.push_back(0);
    }
    if (b) {
      bytes_.back() |= uint8_t(1u << (7 - used_));
    }
    used_ = (used_ + 1) & 7;
    ++bits_;
  }

  void put_bits(uint32_t value, int count) {
    for (int i = count - 1; i >= 0; --i) {
      put_bit(int((value >> i) & 1u));
    }
  }

  // Unsigned Exp-Golomb.
  void put_ue(uint32_t v) {
    const uint32_t code = v + 1;
    const int len = std::bit_width(code);
    for (int i = 0; i < len - 1; ++i) put_bit(0);
    put_bits(code, len);
  }

  int64_t bit_count() const { return bits_; }
  const std::vector<uint8_t>& bytes() const { return bytes_; }
  std::vector<uint8_t> take_bytes() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
  int used_ = 0;
  int64_t bits_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  int get_bit() {
    require(pos_ < size_ * 8, "bitstream underrun");
    const int b = (data_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1;
    ++pos_;
    return b;
  }

  uint32_t get_bits(int count) {
    uint32_t v = 0;
    for (int i = 0; i < count; ++i) v = (v << 1) | uint32_t(get_bit());
    return v;
  }

  uint32_t get_ue() {
    int zeros = 0;
    while (get_bit() == 0) {
      ++zeros;
      require(zeros <= 32, "corrupt exp-golomb code");
    }
    uint32_t code = 1;
    for (int i = 0; i < zeros; ++i) code = (code << 1) | uint32_t(get_bit());
    return code - 1;
  }

  void align_byte() { pos_ = (pos_ + 7) & ~size_t(7); }
  size_t byte_pos() const { return (pos_ + 7) >> 3; }
  size_t bit_pos() const { return pos_; }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

// Signed-to-unsigned zig-zag mapping; 0 stays reserved for the EOB symbol
// after the +1 shift applied at the call site.
inline uint32_t signed_to_unsigned(int32_t q) {
  return q > 0 ? uint32_t(2 * q - 1) : uint32_t(-2 * int64_t(q));
}

inline int32_t unsigned_to_signed(uint32_t u) {
  return (u & 1) ? int32_t((u + 1) / 2) : -int32_t(u / 2);
}

inline const std::vector<int>& zigzag_order(int n) {
  auto build = [](int size) {
    std::vector<int> order;
    order.reserve(size_t(size) * size);
    for (int s = 0; s <= 2 * (size - 1); ++s) {
      if (s % 2 == 0) {  // up-right
        for (int i = std::min(s, size - 1); i >= std::max(0, s - size + 1); --i) {
          order.push_back(i * size + (s - i));
        }
      } else {  // down-left
        for (int i = std::max(0, s - size + 1); i <= std::min(s, size - 1); ++i) {
          order.push_back(i * size + (s - i));
        }
      }
    }
    return order;
  };
  static const std::vector<int> z8 = build(8);
  static const std::vector<int> z16 = build(16);
  require(n == 8 || n == 16, "zigzag: unsupported size");
  return n == 8 ? z8 : z16;
}

// Orthonormal DCT-II basis, row k = basis function k.
inline const std::vector<double>& dct_matrix(int n) {
  auto build = [](int size) {
    std::vector<double> m(size_t(size) * size);
    const double pi = std::acos(-1.0);
    for (int k = 0; k < size; ++k) {
      const double s = k == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
      for (int i = 0; i < size; ++i) {
        m[size_t(k) * size + i] = s * std::cos(pi * (2 * i + 1) * k / (2.0 * size));
      }
    }
    return m;
  };
  static const std::vector<double> m8 = build(8);
  static const std::vector<double> m16 = build(16);
  require(n == 8 || n == 16, "dct: unsupported size");
  return n == 8 ? m8 : m16;
}

// out = C * in * C^T (forward) or C^T * in * C (inverse).
inline void dct_2d(const double* in, double* out, int n, bool forward) {
  const auto& c = dct_matrix(n);
  std::vector<double> tmp(size_t(n) * n);
  // rows: tmp = in * C^T (forward) / in * C (inverse)
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const double w = forward ? c[size_t(k) * n + j] : c[size_t(j) * n + k];
        acc += in[size_t(i) * n + j] * w;
      }
      tmp[size_t(i) * n + k] = acc;
    }
  }
  // cols
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double w = forward ? c[size_t(k) * n + i] : c[size_t(i) * n + k];
        acc += tmp[size_t(i) * n + j] * w;
      }
      out[size_t(k) * n + j] = acc;
    }
  }
}

inline int32_t quantize(double t, double step) {
  const double a = std::abs(t);
  const int32_t q = int32_t((a + step / 3.0) / step);  // dead-zone offset step/3
  return t < 0 ? -q : q;
}

}  // namespace detail

// Deterministic intra pipeline for one CTU: per transform block, DCT-II,
// dead-zone quantization, zig-zag signed Exp-Golomb with an EOB symbol.
// The payload alone reproduces recon bit-exactly.
inline EncodeOutcome code_ctu_with_mode(const LumaFrame& src, const Rect& rect,
                                        CodingMode mode) {
  require(mode.qp >= 0 && mode.qp <= 51, "qp out of range");
  require(mode.transform_size == 8 || mode.transform_size == 16, "bad transform size");
  const int n = mode.transform_size;
  const double step = qp_step(mode.qp);
  const auto& zig = detail::zigzag_order(n);

  EncodeOutcome out;
  out.mode = mode;
  out.recon.assign(size_t(rect.w) * rect.h, 0);

  detail::BitWriter bw;
  bw.put_ue(uint32_t(mode.qp));
  bw.put_bit(n == 16 ? 1 : 0);

  std::vector<double> block(size_t(n) * n);
  std::vector<double> coeff(size_t(n) * n);
  std::vector<int32_t> q(size_t(n) * n);

  for (int by = 0; by < rect.h; by += n) {
    for (int bx = 0; bx < rect.w; bx += n) {
      // Residual against mid-gray; replicate-pad past the CTU boundary so
      // partial blocks stay smooth.
      for (int yy = 0; yy < n; ++yy) {
        const int sy = rect.y + std::min(by + yy, rect.h - 1);
        for (int xx = 0; xx < n; ++xx) {
          const int sx = rect.x + std::min(bx + xx, rect.w - 1);
          block[size_t(yy) * n + xx] = double(src.at(sx, sy)) - 128.0;
        }
      }
      detail::dct_2d(block.data(), coeff.data(), n, true);
      int last_nonzero = -1;
      for (int i = 0; i < n * n; ++i) {
        q[i] = detail::quantize(coeff[zig[i]], step);
        if (q[i] != 0) last_nonzero = i;
      }
      for (int i = 0; i <= last_nonzero; ++i) {
        bw.put_ue(detail::signed_to_unsigned(q[i]) + 1);
      }
      if (last_nonzero < n * n - 1) {
        bw.put_ue(0);  // EOB
      }
      // Reconstruct from the quantized levels, exactly as the decoder will.
      for (int i = 0; i < n * n; ++i) {
        coeff[zig[i]] = double(q[i]) * step;
      }
      detail::dct_2d(coeff.data(), block.data(), n, false);
      for (int yy = 0; yy < std::min(n, rect.h - by); ++yy) {
        for (int xx = 0; xx < std::min(n, rect.w - bx); ++xx) {
          const long r = std::lround(block[size_t(yy) * n + xx] + 128.0);
          out.recon[size_t(by + yy) * rect.w + (bx + xx)] =
              uint8_t(std::clamp(r, 0l, 255l));
        }
      }
    }
  }

  out.bits = bw.bit_count();
  out.payload = bw.take_bytes();
  int64_t sse = 0;
  for (int yy = 0; yy < rect.h; ++yy) {
    for (int xx = 0; xx < rect.w; ++xx) {
      const int d = int(src.at(rect.x + xx, rect.y + yy)) -
                    int(out.recon[size_t(yy) * rect.w + xx]);
      sse += int64_t(d) * d;
    }
  }
  out.sse = sse;
  out.d_mse = double(sse) / double(rect.area());
  out.bpp = double(out.bits) / double(rect.area());
  return out;
}

struct DecodedCtu {
  CodingMode mode;
  std::vector<uint8_t> samples;  // w*h
};

inline DecodedCtu decode_ctu(detail::BitReader& br, int w, int h) {
  DecodedCtu dec;
  dec.mode.qp = int(br.get_ue());
  require(dec.mode.qp >= 0 && dec.mode.qp <= 51, "corrupt payload: qp out of range");
  dec.mode.transform_size = br.get_bit() ? 16 : 8;
  const int n = dec.mode.transform_size;
  const double step = qp_step(dec.mode.qp);
  const auto& zig = detail::zigzag_order(n);
  dec.samples.assign(size_t(w) * h, 0);

  std::vector<double> coeff(size_t(n) * n);
  std::vector<double> block(size_t(n) * n);
  for (int by = 0; by < h; by += n) {
    for (int bx = 0; bx < w; bx += n) {
      std::vector<int32_t> q(size_t(n) * n, 0);
      for (int i = 0; i < n * n; ++i) {
        const uint32_t sym = br.get_ue();
        if (sym == 0) break;  // EOB
        q[i] = detail::unsigned_to_signed(sym - 1);
      }
      for (int i = 0; i < n * n; ++i) {
        coeff[zig[i]] = double(q[i]) * step;
      }
      detail::dct_2d(coeff.data(), block.data(), n, false);
      for (int yy = 0; yy < std::min(n, h - by); ++yy) {
        for (int xx = 0; xx < std::min(n, w - bx); ++xx) {
          const long r = std::lround(block[size_t(yy) * n + xx] + 128.0);
          dec.samples[size_t(by + yy) * w + (bx + xx)] = uint8_t(std::clamp(r, 0l, 255l));
        }
      }
    }
  }
  return dec;
}

inline DecodedCtu decode_ctu(const std::vector<uint8_t>& payload, int w, int h) {
  detail::BitReader br(payload.data(), payload.size());
  return decode_ctu(br, w, h);
}

struct ModeCost {
  CodingMode mode;
  int64_t bits = 0;
  int64_t sse = 0;
  double cost = 0.0;
};

struct RdoResult {
  EncodeOutcome best;
  double best_cost = 0.0;
  std::vector<ModeCost> costs;  // one entry per candidate, mode-set order
};

// Exhaustive mode search minimizing sse + lambda*bits (equals d_mse*M +
// lambda*R). Ties break toward fewer bits, then lower qp, then smaller
// transform so the choice is a total order. D_SSIM is never evaluated here;
// the mapped-SSIM cost differs from the MSE cost only through lambda.
inline RdoResult rdo_encode_ctu(const LumaFrame& src, const Rect& rect,
                                const std::vector<CodingMode>& mode_set,
                                const CostSpec& cost) {
  require(!mode_set.empty(), "rdo: empty mode set");
  require(cost.lambda >= 0.0 && std::isfinite(cost.lambda), "rdo: bad lambda");
  RdoResult res;
  res.costs.reserve(mode_set.size());
  bool have_best = false;
  for (const CodingMode& mode : mode_set) {
    EncodeOutcome out = code_ctu_with_mode(src, rect, mode);
    const double c = double(out.sse) + cost.lambda * double(out.bits);
    res.costs.push_back({mode, out.bits, out.sse, c});
    bool better = false;
    if (!have_best) {
      better = true;
    } else if (c != res.best_cost) {
      better = c < res.best_cost;
    } else if (out.bits != res.best.bits) {
      better = out.bits < res.best.bits;
    } else if (mode.qp != res.best.mode.qp) {
      better = mode.qp < res.best.mode.qp;
    } else {
      better = mode.transform_size < res.best.mode.transform_size;
    }
    if (better) {
      res.best = std::move(out);
      res.best_cost = c;
      have_best = true;
    }
  }
  return res;
}

// Candidate modes for a frame: qp offsets around the base at both transform
// sizes. span=6 with the step of 2 gives the default 14-mode set.
inline std::vector<CodingMode> mode_set_for_frame(int base_qp, int span = 6) {
  require(base_qp >= 6 && base_qp <= 45, "base_qp out of [6, 45]");
  require(span >= 0 && span % 2 == 0, "span must be a non-negative even number");
  std::vector<CodingMode> modes;
  for (int d = -span; d <= span; d += 2) {
    const int qp = std::clamp(base_qp + d, 0, 51);
    modes.push_back({qp, 8});
    modes.push_back({qp, 16});
  }
  return modes;
}

// ---- bitstream container ----------------------------------------------
//
// 16-byte header (little endian): magic "SRTC", u32 width, u32 height,
// u16 ctu_size, u16 frame count. Then byte-aligned CTU payloads in frame
// and raster order, back to back; payloads are self-delimiting.

constexpr char kBitstreamMagic[4] = {'S', 'R', 'T', 'C'};

inline void append_u32le(std::vector<uint8_t>& v, uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(uint8_t(x >> (8 * i)));
}

inline void append_u16le(std::vector<uint8_t>& v, uint16_t x) {
  for (int i = 0; i < 2; ++i) v.push_back(uint8_t(x >> (8 * i)));
}

inline std::vector<uint8_t> pack_bitstream(int width, int height, int ctu_size,
                                           const std::vector<std::vector<std::vector<uint8_t>>>&
                                               frame_ctu_payloads) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kBitstreamMagic, kBitstreamMagic + 4);
  append_u32le(out, uint32_t(width));
  append_u32le(out, uint32_t(height));
  append_u16le(out, uint16_t(ctu_size));
  append_u16le(out, uint16_t(frame_ctu_payloads.size()));
  for (const auto& frame : frame_ctu_payloads) {
    for (const auto& payload : frame) {
      out.insert(out.end(), payload.begin(), payload.end());
    }
  }
  return out;
}

inline std::vector<LumaFrame> decode_bitstream(const std::vector<uint8_t>& data) {
  require(data.size() >= 16, "bitstream too short");
  require(std::memcmp(data.data(), kBitstreamMagic, 4) == 0, "bad bitstream magic");
  auto u32 = [&](size_t off) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data[off + i];
    return v;
  };
  auto u16 = [&](size_t off) { return uint16_t(data[off] | (data[off + 1] << 8)); };
  const int width = int(u32(4));
  const int height = int(u32(8));
  const int ctu_size = u16(12);
  const int frame_count = u16(14);
  const CtuGrid grid = partition(width, height, ctu_size);

  std::vector<LumaFrame> frames;
  detail::BitReader br(data.data() + 16, data.size() - 16);
  for (int f = 0; f < frame_count; ++f) {
    LumaFrame frame = make_frame(width, height);
    for (const Rect& r : grid.rects) {
      DecodedCtu dec = decode_ctu(br, r.w, r.h);
      for (int yy = 0; yy < r.h; ++yy) {
        std::copy(dec.samples.begin() + size_t(yy) * r.w,
                  dec.samples.begin() + size_t(yy + 1) * r.w,
                  frame.samples.begin() + size_t(r.y + yy) * width + r.x);
      }
      br.align_byte();
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

inline void write_bitstream_file(const std::string& path, const std::vector<uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write bitstream: " + path);
  }
  out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
}

}  // namespace ssimrc
