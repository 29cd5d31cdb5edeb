#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "pulsecancel/error.hpp"
#include "pulsecancel/ingest.hpp"
#include "pulsecancel/scenario.hpp"
#include "test_util.hpp"

using namespace pulsecancel;
using namespace pulsecancel::ingest;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void write_int16(const std::filesystem::path& p, const std::vector<std::int16_t>& v) {
  std::ofstream out(p, std::ios::binary);
  for (std::int16_t x : v) {
    const auto u = static_cast<std::uint16_t>(x);
    const char bytes[2] = {static_cast<char>(u & 0xFF), static_cast<char>(u >> 8)};
    out.write(bytes, 2);
  }
}

RadarCube small_cube() {
  RadarCube c;
  c.frames = 3;
  c.fast_time = 4;
  c.config.adc_samples_per_chirp = 4;
  c.config.chirp_duration = 1e-6;
  c.config.bandwidth = c.config.chirp_slope * 1e-6;
  for (std::size_t i = 0; i < 12; ++i) c.iq.emplace_back(0.1 * static_cast<double>(i) - 0.5, 0.05 * static_cast<double>(i));
  return c;
}

}  // namespace

TEST(Ingest, SidecarPath) {
  EXPECT_EQ(sidecar_path("/a/b/cube.bin"), std::filesystem::path("/a/b/cube.json"));
}

TEST(Ingest, DecodesLittleEndianInterleavedIq) {
  testutil::TempDir dir;
  const auto bin = dir.path() / "raw.bin";
  write_int16(bin, {1, -2, 300, -32768, 32767, 0, -1, 7});
  RadarConfig cfg;
  cfg.adc_samples_per_chirp = 2;
  cfg.chirp_duration = 2 / cfg.adc_sample_rate;
  cfg.bandwidth = cfg.chirp_slope * cfg.chirp_duration;
  const RadarCube c = read_raw_cube(bin, cfg);
  ASSERT_EQ(c.frames, 2U);
  ASSERT_EQ(c.fast_time, 2U);
  EXPECT_EQ(c.iq[0], cplx(1, -2));
  EXPECT_EQ(c.iq[1], cplx(300, -32768));
  EXPECT_EQ(c.iq[2], cplx(32767, 0));
  EXPECT_EQ(c.iq[3], cplx(-1, 7));
}

TEST(Ingest, TruncatedFileReportsSizes) {
  testutil::TempDir dir;
  const auto bin = dir.path() / "raw.bin";
  write_int16(bin, std::vector<std::int16_t>(400 * 2 + 2, 1));  // two chirps plus one stray sample
  try {
    (void)read_raw_cube(bin, RadarConfig{});
    FAIL() << "expected SizeMismatchError";
  } catch (const SizeMismatchError& e) {
    EXPECT_EQ(e.actual_bytes(), 1604U);
    EXPECT_EQ(e.expected_bytes(), 2400U);
  }
}

TEST(Ingest, MissingFileIsIoError) {
  try {
    (void)read_raw_cube("/nonexistent/raw.bin", RadarConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Ingest, RoundTripWithinQuantizationStep) {
  testutil::TempDir dir;
  const RadarCube c = small_cube();
  const auto header = write_raw_cube(c, dir.path() / "c.bin");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "c.json"));
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "c.bin"), header.payload_bytes());
  const RadarCube back = read_raw_cube(dir.path() / "c.bin");
  ASSERT_EQ(back.iq.size(), c.iq.size());
  double peak = 0;
  for (auto v : c.iq) peak = std::max({peak, std::abs(v.real()), std::abs(v.imag())});
  EXPECT_NEAR(header.scale, 0.9 * 32767 / peak, 1e-9);
  for (std::size_t i = 0; i < c.iq.size(); ++i) {
    EXPECT_NEAR(back.iq[i].real() / header.scale, c.iq[i].real(), 0.5 / header.scale + 1e-12);
    EXPECT_NEAR(back.iq[i].imag() / header.scale, c.iq[i].imag(), 0.5 / header.scale + 1e-12);
  }
  EXPECT_EQ(back.config.adc_samples_per_chirp, 4U);
}

TEST(Ingest, SidecarFrameCountMustMatchFile) {
  testutil::TempDir dir;
  const auto header = write_raw_cube(small_cube(), dir.path() / "c.bin");
  RawCubeHeader h = header;
  h.frames = 5;
  write_header(h, dir.path() / "c.json");
  EXPECT_THROW((void)read_raw_cube(dir.path() / "c.bin"), SizeMismatchError);
}

TEST(Ingest, RejectsUnsupportedSampleFormat) {
  testutil::TempDir dir;
  RawCubeHeader h = write_raw_cube(small_cube(), dir.path() / "c.bin");
  h.sample_format = "float32";
  write_header(h, dir.path() / "c.json");
  EXPECT_THROW((void)read_raw_cube(dir.path() / "c.bin"), Error);
  h.sample_format = "int16";
  h.endianness = "big";
  write_header(h, dir.path() / "c.json");
  EXPECT_THROW((void)read_raw_cube(dir.path() / "c.bin"), Error);
}

TEST(Ingest, ExplicitScaleClipsNothingInRange) {
  testutil::TempDir dir;
  const auto h = write_raw_cube(small_cube(), dir.path() / "c.bin", 1000.0);
  EXPECT_DOUBLE_EQ(h.scale, 1000.0);
  const auto back = read_raw_cube(dir.path() / "c.bin");
  EXPECT_EQ(back.iq[0], cplx(-500, 0));
}

TEST(ReferenceCsv, ParsesAndIgnoresExtraColumns) {
  testutil::TempDir dir;
  write_text(dir.path() / "r.csv", "time_s,hr_bpm,note\n10,72.5,x\n11,73\n12.5,74.25,y\n");
  const HrTrace t = read_reference_trace(dir.path() / "r.csv");
  ASSERT_EQ(t.size(), 3U);
  EXPECT_DOUBLE_EQ(t.entries[1].time_s, 11.0);
  EXPECT_DOUBLE_EQ(t.entries[2].hr_bpm, 74.25);
  EXPECT_EQ(t.entries[0].tag, TraceTag::Reference);
}

TEST(ReferenceCsv, RejectsImplausibleRowWithRowNumber) {
  testutil::TempDir dir;
  write_text(dir.path() / "r.csv", "time_s,hr_bpm\n10,72\n11,300\n");
  try {
    (void)read_reference_trace(dir.path() / "r.csv");
    FAIL();
  } catch (const RowError& e) {
    EXPECT_EQ(e.row(), 2U);
  }
}

TEST(ReferenceCsv, RejectsNonIncreasingTime) {
  testutil::TempDir dir;
  write_text(dir.path() / "r.csv", "time_s,hr_bpm\n10,72\n10,73\n");
  EXPECT_THROW((void)read_reference_trace(dir.path() / "r.csv"), RowError);
}

TEST(ReferenceCsv, RejectsBadHeaderAndGarbage) {
  testutil::TempDir dir;
  write_text(dir.path() / "a.csv", "t,hr\n1,70\n");
  EXPECT_THROW((void)read_reference_trace(dir.path() / "a.csv"), Error);
  write_text(dir.path() / "b.csv", "time_s,hr_bpm\n1,seventy\n");
  EXPECT_THROW((void)read_reference_trace(dir.path() / "b.csv"), RowError);
}

TEST(TraceCsv, RoundTripKeepsTagsAndInfiniteDelta) {
  testutil::TempDir dir;
  HrTrace t;
  t.entries = {{10, 72.125, TraceTag::Reliable1st, 0.01},
               {11, 73.5, TraceTag::Refined, 0.25},
               {12, 73.5, TraceTag::Held, std::numeric_limits<double>::infinity()}};
  write_trace_csv(t, dir.path() / "t.csv");
  const HrTrace back = read_trace_csv(dir.path() / "t.csv");
  ASSERT_EQ(back.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(back.entries[i].time_s, t.entries[i].time_s);
    EXPECT_NEAR(back.entries[i].hr_bpm, t.entries[i].hr_bpm, 1e-4);
    EXPECT_EQ(back.entries[i].tag, t.entries[i].tag);
  }
  EXPECT_TRUE(std::isinf(back.entries[2].delta_hz));
}

TEST(TraceCsv, ReferenceWriterReadsBack) {
  testutil::TempDir dir;
  const auto ref = synth::reference_trace(synth::default_scenario(), 10, 2);
  write_reference_trace(ref, dir.path() / "ref.csv");
  const auto back = read_reference_trace(dir.path() / "ref.csv");
  ASSERT_EQ(back.size(), ref.size());
  EXPECT_NEAR(back.entries[0].hr_bpm, 72.0, 1e-9);
}
