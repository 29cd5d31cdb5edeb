#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "pulsecancel/types.hpp"

namespace pulsecancel::ingest {

/// JSON sidecar describing a `.bin` capture: interleaved signed 16-bit
/// little-endian I/Q, frame-major.
struct RawCubeHeader {
  std::size_t frames = 0;
  std::size_t fast_time = 0;
  std::string sample_format = "int16";
  std::string endianness = "little";
  double scale = 1.0;  // integer counts per unit of the original float samples
  RadarConfig config;

  std::uintmax_t payload_bytes() const noexcept { return static_cast<std::uintmax_t>(frames) * fast_time * 4U; }
};

/// cube.bin -> cube.json
std::filesystem::path sidecar_path(const std::filesystem::path& bin_path);

RawCubeHeader read_header(const std::filesystem::path& json_path);
void write_header(const RawCubeHeader& header, const std::filesystem::path& json_path);

/// Reads a headerless capture; fast-time length comes from `config`.
/// Samples are returned as integer counts, I + jQ.
RadarCube read_raw_cube(const std::filesystem::path& path, const RadarConfig& config);

/// Reads a capture described by its JSON sidecar and checks the declared size.
RadarCube read_raw_cube(const std::filesystem::path& path);

/// Quantizes to int16 and writes `path` plus its sidecar. Without an explicit
/// scale the largest I or Q magnitude maps to 90% of full scale.
RawCubeHeader write_raw_cube(const RadarCube& cube, const std::filesystem::path& path,
                             std::optional<double> scale = std::nullopt);

/// CSV with header `time_s,hr_bpm` (extra trailing columns are ignored).
HrTrace read_reference_trace(const std::filesystem::path& path);
void write_reference_trace(const HrTrace& trace, const std::filesystem::path& path);

/// CSV with header `time_s,hr_bpm,tag,delta_hz`.
void write_trace_csv(const HrTrace& trace, const std::filesystem::path& path);
HrTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace pulsecancel::ingest
