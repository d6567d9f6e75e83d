#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "fvc/errors.hpp"
#include "fvc/io.hpp"

using namespace fvc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fvc_io_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

FlowField sample_flow() {
  FlowField f(5, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) f.set(x, y, 0.25 * x - 1.0, 0.5 * y);
  f.valid.set(2, 1, false);
  f.valid.set(4, 3, false);
  return f;
}

Frame sample_frame(int channels) {
  Frame f(7, 5, channels);
  for (std::size_t i = 0; i < f.data.size(); ++i)
    f.data[i] = std::uint8_t((i * 37 + 11) % 256);
  return f;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("flow fields survive the .flo round trip exactly") {
  TempDir tmp;
  const FlowField f = sample_flow();
  write_flo(f, tmp.path / "a.flo");
  const FlowField g = read_flo(tmp.path / "a.flo");
  REQUIRE(g.same_shape(f));
  CHECK(g.valid.valid == f.valid.valid);
  // Invalid pixels travel as sentinels, so only valid values round trip.
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    if (!f.valid.valid[i]) continue;
    CHECK(g.u[i] == f.u[i]);
    CHECK(g.v[i] == f.v[i]);
  }
}

TEST_CASE("a 1x1 flow file is exactly 20 bytes with the expected layout") {
  TempDir tmp;
  FlowField f(1, 1);
  f.set(0, 0, 1.5, -2.0);
  write_flo(f, tmp.path / "one.flo");
  CHECK(fs::file_size(tmp.path / "one.flo") == 20);

  std::ifstream is(tmp.path / "one.flo", std::ios::binary);
  char head[12];
  is.read(head, 12);
  CHECK(std::string(head, 4) == "PIEH");
  // little-endian 1, 1
  CHECK(std::uint8_t(head[4]) == 1);
  CHECK(std::uint8_t(head[7]) == 0);
  CHECK(std::uint8_t(head[8]) == 1);
}

TEST_CASE("flo reader rejects bad magic and truncation") {
  TempDir tmp;
  write_text_file(tmp.path / "bad.flo", "XXXX\x01\x00\x00\x00\x01\x00\x00\x00");
  CHECK_THROWS_AS(read_flo(tmp.path / "bad.flo"), BadMagic);

  write_text_file(tmp.path / "short.flo", "PIEH\x01\x00\x00\x00");
  CHECK_THROWS_AS(read_flo(tmp.path / "short.flo"), TruncatedFile);

  const FlowField f = sample_flow();
  write_flo(f, tmp.path / "cut.flo");
  fs::resize_file(tmp.path / "cut.flo", fs::file_size(tmp.path / "cut.flo") - 5);
  CHECK_THROWS_AS(read_flo(tmp.path / "cut.flo"), TruncatedFile);

  CHECK_THROWS_AS(read_flo(tmp.path / "absent.flo"), IoFailure);
}

TEST_CASE("frames survive PNG and PNM round trips exactly") {
  TempDir tmp;
  for (int ch : {1, 3}) {
    const Frame f = sample_frame(ch);
    const char* ext_png = "a.png";
    write_frame(f, tmp.path / ext_png);
    const Frame g = read_frame(tmp.path / ext_png);
    REQUIRE(g.same_shape(f));
    CHECK(g.data == f.data);

    const fs::path pnm = tmp.path / (ch == 1 ? "a.pgm" : "a.ppm");
    write_frame(f, pnm);
    const Frame h = read_frame(pnm);
    REQUIRE(h.same_shape(f));
    CHECK(h.data == f.data);
  }
}

TEST_CASE("PNG writes are byte-identical across calls") {
  TempDir tmp;
  const Frame f = sample_frame(3);
  write_frame(f, tmp.path / "x.png");
  write_frame(f, tmp.path / "y.png");
  CHECK(read_text_file(tmp.path / "x.png") ==
        read_text_file(tmp.path / "y.png"));
}

TEST_CASE("frame readers reject garbage") {
  TempDir tmp;
  write_text_file(tmp.path / "junk.png", "not a png at all");
  CHECK_THROWS_AS(read_frame(tmp.path / "junk.png"), CorruptFile);

  write_text_file(tmp.path / "junk.pgm", "P5\n3 3\n255\nxy");
  CHECK_THROWS_AS(read_frame(tmp.path / "junk.pgm"), TruncatedFile);

  CHECK_THROWS_AS(read_frame(tmp.path / "a.bmp"), UnsupportedFormat);
}

TEST_CASE("PGM headers may carry comments") {
  TempDir tmp;
  std::string data = "P5\n# a comment\n2 1\n# more\n255\nAB";
  write_text_file(tmp.path / "c.pgm", data);
  const Frame f = read_frame(tmp.path / "c.pgm");
  CHECK(f.width == 2);
  CHECK(f.height == 1);
  CHECK(f.at(0, 0) == 'A');
  CHECK(f.at(1, 0) == 'B');
}

TEST_CASE("masks round trip through PGM") {
  TempDir tmp;
  ValidityMask m(4, 3, true);
  m.set(1, 2, false);
  m.set(3, 0, false);
  write_mask(m, tmp.path / "m.pgm");
  const ValidityMask n = read_mask(tmp.path / "m.pgm");
  CHECK(n.valid == m.valid);
}

TEST_CASE("manifest round trips and verifies artifacts") {
  TempDir tmp;
  Frame f = sample_frame(1);
  FlowField flow = sample_flow();
  fs::create_directories(tmp.path / "t0");
  write_frame(f, tmp.path / "t0/frame_00.png");
  write_frame(f, tmp.path / "t0/ref_00.png");
  write_flo(flow, tmp.path / "t0/flow.flo");
  write_text_file(tmp.path / "t0/params.json", "{}");

  Manifest m;
  m.dataset_id = "unit";
  m.generator_config = "{\"seed\":1}";
  TimestampRecord r;
  r.timestamp_id = "t0";
  r.source_id = "seq";
  r.frame_paths = {"t0/frame_00.png"};
  r.ref_paths = {"t0/ref_00.png"};
  r.flow_path = "t0/flow.flo";
  r.params_path = "t0/params.json";
  m.timestamps.push_back(r);

  write_manifest(m, tmp.path / "manifest.json");
  const Manifest back = read_manifest(tmp.path / "manifest.json");
  CHECK(back.dataset_id == "unit");
  CHECK(back.version == "1");
  REQUIRE(back.timestamps.size() == 1);
  CHECK(back.timestamps[0].timestamp_id == "t0");
  CHECK(back.timestamps[0].frame_paths == r.frame_paths);
  CHECK(back.timestamps[0].ref_paths == r.ref_paths);

  // A record pointing at a missing file must not be written out.
  m.timestamps[0].flow_path = "t0/absent.flo";
  CHECK_THROWS_AS(write_manifest(m, tmp.path / "manifest.json"), IoFailure);

  write_text_file(tmp.path / "broken.json", "{\"dataset_id\": 3}");
  CHECK_THROWS_AS(read_manifest(tmp.path / "broken.json"), CorruptFile);
}

}  // TEST_SUITE
