#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssimrc/common.hpp"

namespace ssimrc {

// 8-bit luma plane. Chroma is dropped on load; all metrics and coding
// operate on Y only.
struct LumaFrame {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> samples;  // row-major, width*height

  uint8_t at(int x, int y) const { return samples[size_t(y) * width + x]; }
  uint8_t& at(int x, int y) { return samples[size_t(y) * width + x]; }
  int64_t pixel_count() const { return int64_t(width) * height; }
};

inline LumaFrame make_frame(int width, int height, uint8_t fill = 0) {
  require(width >= 1 && height >= 1, "frame dimensions must be positive");
  LumaFrame f;
  f.width = width;
  f.height = height;
  f.samples.assign(size_t(width) * height, fill);
  return f;
}

// Raster-order CTU tiling of a frame. Boundary CTUs shrink to fit.
struct CtuGrid {
  int ctu_size = 64;
  int cols = 0;
  int rows = 0;
  std::vector<Rect> rects;            // raster order
  std::vector<int64_t> pixel_counts;  // M per CTU

  int count() const { return int(rects.size()); }
};

inline CtuGrid partition(int width, int height, int ctu_size) {
  require(ctu_size == 16 || ctu_size == 32 || ctu_size == 64,
          "ctu_size must be one of 16, 32, 64");
  require(width >= 1 && height >= 1, "frame dimensions must be positive");
  CtuGrid grid;
  grid.ctu_size = ctu_size;
  grid.cols = (width + ctu_size - 1) / ctu_size;
  grid.rows = (height + ctu_size - 1) / ctu_size;
  grid.rects.reserve(size_t(grid.cols) * grid.rows);
  for (int by = 0; by < grid.rows; ++by) {
    for (int bx = 0; bx < grid.cols; ++bx) {
      Rect r;
      r.x = bx * ctu_size;
      r.y = by * ctu_size;
      r.w = std::min(ctu_size, width - r.x);
      r.h = std::min(ctu_size, height - r.y);
      grid.rects.push_back(r);
      grid.pixel_counts.push_back(r.area());
    }
  }
  return grid;
}

enum class SequenceFormat { Y4m, RawYuv420, PgmSequence };

inline const char* format_name(SequenceFormat f) {
  switch (f) {
    case SequenceFormat::Y4m: return "y4m";
    case SequenceFormat::RawYuv420: return "raw-yuv420-luma";
    case SequenceFormat::PgmSequence: return "pgm-sequence";
  }
  return "?";
}

inline SequenceFormat parse_format(const std::string& s) {
  if (s == "y4m") return SequenceFormat::Y4m;
  if (s == "yuv" || s == "raw" || s == "raw-yuv420-luma") return SequenceFormat::RawYuv420;
  if (s == "pgm" || s == "pgm-sequence") return SequenceFormat::PgmSequence;
  throw std::invalid_argument("unknown sequence format: " + s);
}

namespace detail {

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

// PGM P5, 8-bit only.
inline LumaFrame read_pgm(const std::string& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      const char c = char(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_token = [&]() -> std::string {
    skip_ws();
    std::string tok;
    while (pos < bytes.size() && !isspace(bytes[pos])) {
      tok.push_back(char(bytes[pos++]));
    }
    return tok;
  };
  if (read_token() != "P5") {
    throw std::runtime_error("malformed header: not a binary PGM (P5): " + path);
  }
  const std::string ws = read_token();
  const std::string hs = read_token();
  const std::string ms = read_token();
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ws);
    h = std::stoi(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw std::runtime_error("malformed header: bad PGM fields in " + path);
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw std::runtime_error("malformed header: unsupported PGM (need 8-bit): " + path);
  }
  ++pos;  // single whitespace after maxval
  const size_t need = size_t(w) * h;
  if (bytes.size() < pos + need) {
    throw std::runtime_error("truncated payload: " + path);
  }
  LumaFrame f = make_frame(w, h);
  std::copy(bytes.begin() + pos, bytes.begin() + pos + need, f.samples.begin());
  return f;
}

inline std::vector<LumaFrame> load_y4m(const std::string& path, int frame_count) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  size_t pos = 0;
  auto read_line = [&]() -> std::string {
    std::string line;
    while (pos < bytes.size() && bytes[pos] != '\n') {
      line.push_back(char(bytes[pos++]));
    }
    if (pos < bytes.size()) ++pos;  // consume '\n'
    return line;
  };
  const std::string header = read_line();
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;
  if (tok != "YUV4MPEG2") {
    throw std::runtime_error("malformed header: missing YUV4MPEG2 signature");
  }
  int w = 0, h = 0;
  bool mono = false;
  while (hs >> tok) {
    if (tok.size() < 2) continue;
    switch (tok[0]) {
      case 'W': w = std::atoi(tok.c_str() + 1); break;
      case 'H': h = std::atoi(tok.c_str() + 1); break;
      case 'C':
        if (tok.rfind("C420", 0) == 0) {
          mono = false;
        } else if (tok == "Cmono") {
          mono = true;
        } else {
          throw std::runtime_error("malformed header: unsupported chroma mode " + tok);
        }
        break;
      default: break;  // frame rate, interlacing, aspect: ignored
    }
  }
  if (w < 1 || h < 1) {
    throw std::runtime_error("malformed header: missing W/H in y4m header");
  }
  const size_t luma_size = size_t(w) * h;
  const size_t frame_size = mono ? luma_size : luma_size + luma_size / 2;
  if (!mono && ((w % 2) || (h % 2))) {
    throw std::runtime_error("malformed header: odd dimensions with 4:2:0 chroma");
  }

  std::vector<LumaFrame> frames;
  while (int(frames.size()) < frame_count && pos < bytes.size()) {
    const std::string marker = read_line();
    if (marker.rfind("FRAME", 0) != 0) {
      throw std::runtime_error("malformed header: bad FRAME marker");
    }
    if (bytes.size() - pos < frame_size) {
      throw std::runtime_error("truncated payload: incomplete y4m frame");
    }
    LumaFrame f = make_frame(w, h);
    std::copy(bytes.begin() + pos, bytes.begin() + pos + luma_size, f.samples.begin());
    pos += frame_size;
    frames.push_back(std::move(f));
  }
  return frames;
}

inline std::vector<LumaFrame> load_raw_yuv420(const std::string& path, int frame_count,
                                              int width, int height) {
  require(width >= 1 && height >= 1, "raw input needs explicit --width/--height");
  std::vector<uint8_t> bytes = read_file_bytes(path);
  const size_t luma_size = size_t(width) * height;
  const size_t frame_size = luma_size + luma_size / 2;
  if (bytes.size() % frame_size != 0) {
    throw std::runtime_error("truncated payload: raw size " + std::to_string(bytes.size()) +
                             " is not a multiple of frame size " + std::to_string(frame_size));
  }
  const int available = int(bytes.size() / frame_size);
  std::vector<LumaFrame> frames;
  for (int i = 0; i < std::min(available, frame_count); ++i) {
    LumaFrame f = make_frame(width, height);
    const size_t off = size_t(i) * frame_size;
    std::copy(bytes.begin() + off, bytes.begin() + off + luma_size, f.samples.begin());
    frames.push_back(std::move(f));
  }
  return frames;
}

inline std::vector<LumaFrame> load_pgm_sequence(const std::string& dir, int frame_count) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("pgm-sequence input must be a directory: " + dir);
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      names.push_back(entry.path().string());
    }
  }
  std::sort(names.begin(), names.end());
  std::vector<LumaFrame> frames;
  for (const auto& name : names) {
    if (int(frames.size()) >= frame_count) break;
    frames.push_back(read_pgm(name));
  }
  return frames;
}

}  // namespace detail

// Loads frame_count luma frames, or all available if fewer (with a warning
// on stderr). Chroma planes of 4:2:0 input are skipped.
inline std::vector<LumaFrame> load_sequence(const std::string& path, SequenceFormat format,
                                            int frame_count, int width = 0, int height = 0) {
  require(frame_count >= 1, "frame_count must be positive");
  std::vector<LumaFrame> frames;
  switch (format) {
    case SequenceFormat::Y4m:
      frames = detail::load_y4m(path, frame_count);
      break;
    case SequenceFormat::RawYuv420:
      frames = detail::load_raw_yuv420(path, frame_count, width, height);
      break;
    case SequenceFormat::PgmSequence:
      frames = detail::load_pgm_sequence(path, frame_count);
      break;
  }
  if (frames.empty()) {
    throw std::runtime_error("zero frames in input: " + path);
  }
  if (int(frames.size()) < frame_count) {
    std::cerr << "warning: requested " << frame_count << " frames, only "
              << frames.size() << " available in " << path << "\n";
  }
  for (const auto& f : frames) {
    if (f.width < 16 || f.height < 16) {
      throw std::runtime_error("frame smaller than 16x16 not supported");
    }
  }
  return frames;
}

inline void write_raw_luma(const std::string& path, const std::vector<LumaFrame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  for (const auto& f : frames) {
    out.write(reinterpret_cast<const char*>(f.samples.data()),
              std::streamsize(f.samples.size()));
  }
}

// Emits 4:2:0 y4m with neutral chroma so standard tools can play it.
inline void write_y4m(const std::string& path, const std::vector<LumaFrame>& frames,
                      int fps_num = 30, int fps_den = 1) {
  require(!frames.empty(), "cannot write empty sequence");
  const int w = frames.front().width;
  const int h = frames.front().height;
  require(w % 2 == 0 && h % 2 == 0, "y4m 4:2:0 output needs even dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << "YUV4MPEG2 W" << w << " H" << h << " F" << fps_num << ":" << fps_den
      << " Ip A1:1 C420\n";
  const std::vector<uint8_t> chroma(size_t(w / 2) * (h / 2), 128);
  for (const auto& f : frames) {
    require(f.width == w && f.height == h, "mixed frame sizes in sequence");
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(f.samples.data()),
              std::streamsize(f.samples.size()));
    out.write(reinterpret_cast<const char*>(chroma.data()), std::streamsize(chroma.size()));
    out.write(reinterpret_cast<const char*>(chroma.data()), std::streamsize(chroma.size()));
  }
}

inline void write_pgm(const std::string& path, const LumaFrame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << "P5\n" << f.width << " " << f.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.samples.data()), std::streamsize(f.samples.size()));
}

}  // namespace ssimrc
