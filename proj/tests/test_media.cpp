#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "ssimrc/media.hpp"
#include "test_support.hpp"

using namespace ssimrc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "ssimrc_media_tests";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("raw 4:2:0 loader keeps exactly the luma planes") {
  // Two 64x64 frames: 4096 luma + 2048 chroma each = 12288 bytes total.
  std::vector<uint8_t> bytes(12288);
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = uint8_t(i * 7);
  const fs::path path = temp_dir() / "two_frames.yuv";
  write_bytes(path, bytes);

  const auto frames = load_sequence(path.string(), SequenceFormat::RawYuv420, 2, 64, 64);
  REQUIRE(frames.size() == 2);
  REQUIRE(frames[0].samples.size() == 4096);
  REQUIRE(frames[1].samples.size() == 4096);
  for (int i = 0; i < 4096; ++i) {
    REQUIRE(frames[0].samples[i] == bytes[i]);
    REQUIRE(frames[1].samples[i] == bytes[6144 + i]);
  }
}

TEST_CASE("raw loader rejects truncated payloads") {
  std::vector<uint8_t> bytes(12000, 1);  // not a multiple of 6144
  const fs::path path = temp_dir() / "truncated.yuv";
  write_bytes(path, bytes);
  REQUIRE_THROWS_WITH(load_sequence(path.string(), SequenceFormat::RawYuv420, 2, 64, 64),
                      Catch::Matchers::ContainsSubstring("truncated payload"));
}

TEST_CASE("raw loader warns and returns all frames when fewer are available") {
  std::vector<uint8_t> bytes(6144, 9);
  const fs::path path = temp_dir() / "one_frame.yuv";
  write_bytes(path, bytes);
  const auto frames = load_sequence(path.string(), SequenceFormat::RawYuv420, 5, 64, 64);
  REQUIRE(frames.size() == 1);
}

TEST_CASE("pgm sequence loads in lexicographic order") {
  const fs::path dir = temp_dir() / "pgmseq";
  fs::create_directories(dir);
  for (int i = 0; i < 4; ++i) {
    LumaFrame f = make_frame(32, 16, uint8_t(i * 10));
    char name[16];
    std::snprintf(name, sizeof name, "f%03d.pgm", i);
    write_pgm((dir / name).string(), f);
  }
  const auto frames = load_sequence(dir.string(), SequenceFormat::PgmSequence, 2);
  REQUIRE(frames.size() == 2);
  REQUIRE(frames[0].samples[0] == 0);
  REQUIRE(frames[1].samples[0] == 10);
}

TEST_CASE("y4m loader rejects malformed headers") {
  const fs::path path = temp_dir() / "bad.y4m";
  {
    std::ofstream out(path, std::ios::binary);
    out << "YUV4MPEG3 W64 H64 F30:1\nFRAME\n";
  }
  REQUIRE_THROWS_WITH(load_sequence(path.string(), SequenceFormat::Y4m, 1),
                      Catch::Matchers::ContainsSubstring("malformed header"));

  // Payload smaller than the declared dimensions imply.
  {
    std::ofstream out(path, std::ios::binary);
    out << "YUV4MPEG2 W64 H64 F30:1 C420\nFRAME\n";
    std::vector<char> short_payload(100, 0);
    out.write(short_payload.data(), std::streamsize(short_payload.size()));
  }
  REQUIRE_THROWS_WITH(load_sequence(path.string(), SequenceFormat::Y4m, 1),
                      Catch::Matchers::ContainsSubstring("truncated payload"));
}

TEST_CASE("y4m loader rejects empty inputs") {
  const fs::path path = temp_dir() / "empty.y4m";
  {
    std::ofstream out(path, std::ios::binary);
    out << "YUV4MPEG2 W64 H64 F30:1 C420\n";
  }
  REQUIRE_THROWS_WITH(load_sequence(path.string(), SequenceFormat::Y4m, 1),
                      Catch::Matchers::ContainsSubstring("zero frames"));
}

TEST_CASE("y4m write/load round trip preserves luma bytes") {
  std::vector<LumaFrame> frames;
  for (int i = 0; i < 3; ++i) {
    frames.push_back(testutil::textured_frame(64, 48, 100 + i));
  }
  const fs::path path = temp_dir() / "roundtrip.y4m";
  write_y4m(path.string(), frames);
  const auto loaded = load_sequence(path.string(), SequenceFormat::Y4m, 3);
  REQUIRE(loaded.size() == 3);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(loaded[i].samples == frames[i].samples);
  }
}

TEST_CASE("raw luma re-emission is byte-identical") {
  std::vector<uint8_t> bytes(2 * 6144);
  SplitMix64 rng(42);
  for (auto& b : bytes) b = uint8_t(rng.next());
  const fs::path in_path = temp_dir() / "rt_in.yuv";
  write_bytes(in_path, bytes);

  const auto frames = load_sequence(in_path.string(), SequenceFormat::RawYuv420, 2, 64, 64);
  const fs::path out_path = temp_dir() / "rt_out.raw";
  write_raw_luma(out_path.string(), frames);

  std::ifstream in(out_path, std::ios::binary);
  std::vector<uint8_t> emitted((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
  REQUIRE(emitted.size() == 2 * 4096);
  for (int f = 0; f < 2; ++f) {
    for (int i = 0; i < 4096; ++i) {
      REQUIRE(emitted[f * 4096 + i] == bytes[f * 6144 + i]);
    }
  }
}

TEST_CASE("partition tiles exactly") {
  SECTION("128x128 at 64") {
    const CtuGrid g = partition(128, 128, 64);
    REQUIRE(g.count() == 4);
    for (int64_t m : g.pixel_counts) REQUIRE(m == 4096);
  }
  SECTION("96x64 at 64 has a boundary CTU") {
    const CtuGrid g = partition(96, 64, 64);
    REQUIRE(g.count() == 2);
    REQUIRE(g.pixel_counts[0] == 4096);
    REQUIRE(g.pixel_counts[1] == 2048);
  }
  SECTION("130x66 at 64") {
    const CtuGrid g = partition(130, 66, 64);
    REQUIRE(g.count() == 6);
    int64_t total = 0;
    for (int64_t m : g.pixel_counts) total += m;
    REQUIRE(total == 130 * 66);
  }
  SECTION("ctu_size is restricted") {
    REQUIRE_THROWS(partition(64, 64, 48));
  }
}

TEST_CASE("partition covers every pixel exactly once") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 16 + int(rng.below(200));
    const int h = 16 + int(rng.below(200));
    const int ctu = std::array<int, 3>{16, 32, 64}[rng.below(3)];
    const CtuGrid g = partition(w, h, ctu);

    std::vector<int> paint(size_t(w) * h, 0);
    int64_t total = 0;
    for (size_t i = 0; i < g.rects.size(); ++i) {
      const Rect& r = g.rects[i];
      REQUIRE(r.area() == g.pixel_counts[i]);
      total += r.area();
      for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) {
          ++paint[size_t(y) * w + x];
        }
      }
    }
    REQUIRE(total == int64_t(w) * h);
    for (int v : paint) REQUIRE(v == 1);
  }
}
