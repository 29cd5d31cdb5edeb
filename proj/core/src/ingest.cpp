#include "pulsecancel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pulsecancel/error.hpp"
#include "pulsecancel/scenario.hpp"

namespace pulsecancel::ingest {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kBytesPerSample = 4;  // int16 I + int16 Q

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::int16_t load_le16(const unsigned char* p) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0]) | (static_cast<std::uint16_t>(p[1]) << 8));
}

void store_le16(unsigned char* p, std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  p[0] = static_cast<unsigned char>(u & 0xFF);
  p[1] = static_cast<unsigned char>(u >> 8);
}

RadarCube decode(const std::vector<unsigned char>& bytes, std::size_t frames, std::size_t fast_time,
                 const RadarConfig& config) {
  RadarCube cube;
  cube.frames = frames;
  cube.fast_time = fast_time;
  cube.config = config;
  cube.iq.resize(frames * fast_time);
  for (std::size_t i = 0; i < cube.iq.size(); ++i) {
    const unsigned char* p = bytes.data() + i * kBytesPerSample;
    cube.iq[i] = cplx(load_le16(p), load_le16(p + 2));
  }
  return cube;
}

std::int16_t quantize(double v, double scale) {
  const double q = std::round(v * scale);
  return static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::size_t row, const char* column) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw RowError(row, fmt::format("cannot parse {} value '{}'", column, text));
  }
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : split(view)) cells.emplace_back(c);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw Error(ErrorCode::InvalidData, fmt::format("{}: empty CSV file", path.string()));
  return t;
}

void require_columns(const CsvTable& t, const std::vector<std::string>& names, const fs::path& path) {
  if (t.header.size() < names.size() || !std::equal(names.begin(), names.end(), t.header.begin())) {
    std::string expected;
    for (const auto& n : names) expected += (expected.empty() ? "" : ",") + n;
    throw Error(ErrorCode::InvalidData, fmt::format("{}: header must start with '{}'", path.string(), expected));
  }
}

void check_time_order(const HrTrace& trace, std::size_t row) {
  const auto& e = trace.entries;
  if (e.size() >= 2 && !(e.back().time_s > e[e.size() - 2].time_s)) {
    throw RowError(row, fmt::format("time {} does not increase", e.back().time_s));
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace

fs::path sidecar_path(const fs::path& bin_path) {
  fs::path p = bin_path;
  p.replace_extension(".json");
  return p;
}

RawCubeHeader read_header(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", json_path.string()));
  try {
    nlohmann::json j;
    in >> j;
    RawCubeHeader h;
    h.frames = j.at("frames").get<std::size_t>();
    h.fast_time = j.at("fast_time").get<std::size_t>();
    h.sample_format = j.value("sample_format", std::string("int16"));
    h.endianness = j.value("endianness", std::string("little"));
    h.scale = j.value("scale", 1.0);
    if (j.contains("radar")) h.config = synth::radar_from_json(j.at("radar"));
    if (h.sample_format != "int16" || h.endianness != "little") {
      throw Error(ErrorCode::InvalidData,
                  fmt::format("{}: unsupported sample format {}/{}", json_path.string(), h.sample_format, h.endianness));
    }
    if (h.fast_time != h.config.adc_samples_per_chirp) {
      throw Error(ErrorCode::InvalidData, fmt::format("{}: fast_time {} disagrees with adc_samples_per_chirp {}",
                                                      json_path.string(), h.fast_time, h.config.adc_samples_per_chirp));
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, fmt::format("{}: {}", json_path.string(), e.what()));
  }
}

void write_header(const RawCubeHeader& h, const fs::path& json_path) {
  nlohmann::json j{{"frames", h.frames},
                   {"fast_time", h.fast_time},
                   {"sample_format", h.sample_format},
                   {"endianness", h.endianness},
                   {"scale", h.scale},
                   {"radar", synth::radar_to_json(h.config)}};
  auto out = open_out(json_path);
  out << j.dump(2) << '\n';
}

RadarCube read_raw_cube(const fs::path& path, const RadarConfig& config) {
  const std::size_t fast_time = config.adc_samples_per_chirp;
  if (fast_time == 0) throw Error(ErrorCode::InvalidArgument, "adc_samples_per_chirp must be positive");
  const auto bytes = read_bytes(path);
  const std::size_t record = fast_time * kBytesPerSample;
  if (bytes.empty()) throw Error(ErrorCode::InvalidData, fmt::format("{}: file is empty", path.string()));
  if (bytes.size() % record != 0) {
    const std::uintmax_t expected = (bytes.size() / record + 1) * record;
    throw SizeMismatchError(path.string(), expected, bytes.size());
  }
  return decode(bytes, bytes.size() / record, fast_time, config);
}

RadarCube read_raw_cube(const fs::path& path) {
  const RawCubeHeader h = read_header(sidecar_path(path));
  const auto bytes = read_bytes(path);
  if (bytes.size() != h.payload_bytes()) throw SizeMismatchError(path.string(), h.payload_bytes(), bytes.size());
  if (bytes.empty()) throw Error(ErrorCode::InvalidData, fmt::format("{}: file is empty", path.string()));
  return decode(bytes, h.frames, h.fast_time, h.config);
}

RawCubeHeader write_raw_cube(const RadarCube& cube, const fs::path& path, std::optional<double> scale) {
  cube.validate();
  double s = 1.0;
  if (scale) {
    if (!(*scale > 0) || !std::isfinite(*scale)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
    s = *scale;
  } else {
    double peak = 0.0;
    for (const cplx& v : cube.iq) peak = std::max({peak, std::abs(v.real()), std::abs(v.imag())});
    if (peak > 0) s = 0.9 * 32767.0 / peak;
  }
  std::vector<unsigned char> bytes(cube.iq.size() * kBytesPerSample);
  for (std::size_t i = 0; i < cube.iq.size(); ++i) {
    unsigned char* p = bytes.data() + i * kBytesPerSample;
    store_le16(p, quantize(cube.iq[i].real(), s));
    store_le16(p + 2, quantize(cube.iq[i].imag(), s));
  }
  {
    auto out = open_out(path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, fmt::format("short write to {}", path.string()));
  }
  RawCubeHeader h;
  h.frames = cube.frames;
  h.fast_time = cube.fast_time;
  h.scale = s;
  h.config = cube.config;
  write_header(h, sidecar_path(path));
  return h;
}

HrTrace read_reference_trace(const fs::path& path) {
  const CsvTable t = read_csv(path);
  require_columns(t, {"time_s", "hr_bpm"}, path);
  HrTrace trace;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t row = r + 1;
    const auto& cells = t.rows[r];
    if (cells.size() < 2) throw RowError(row, "expected at least 2 columns");
    const double time = parse_double(cells[0], row, "time_s");
    const double bpm = parse_double(cells[1], row, "hr_bpm");
    if (!std::isfinite(time)) throw RowError(row, "time is not finite");
    if (!(bpm > 20.0 && bpm < 250.0)) throw RowError(row, fmt::format("hr_bpm {} outside (20, 250)", bpm));
    trace.entries.push_back({time, bpm, TraceTag::Reference, 0.0});
    check_time_order(trace, row);
  }
  return trace;
}

void write_reference_trace(const HrTrace& trace, const fs::path& path) {
  auto out = open_out(path);
  out << "time_s,hr_bpm\n";
  for (const auto& e : trace.entries) out << fmt::format("{:.6g},{:.6g}\n", e.time_s, e.hr_bpm);
}

void write_trace_csv(const HrTrace& trace, const fs::path& path) {
  auto out = open_out(path);
  out << "time_s,hr_bpm,tag,delta_hz\n";
  for (const auto& e : trace.entries) {
    out << fmt::format("{:.6g},{:.6g},{},{:.6g}\n", e.time_s, e.hr_bpm, to_string(e.tag), e.delta_hz);
  }
}

HrTrace read_trace_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  require_columns(t, {"time_s", "hr_bpm", "tag", "delta_hz"}, path);
  HrTrace trace;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t row = r + 1;
    const auto& cells = t.rows[r];
    if (cells.size() < 4) throw RowError(row, "expected 4 columns");
    TraceEntry e;
    e.time_s = parse_double(cells[0], row, "time_s");
    e.hr_bpm = parse_double(cells[1], row, "hr_bpm");
    try {
      e.tag = parse_trace_tag(cells[2]);
    } catch (const Error& err) {
      throw RowError(row, err.what());
    }
    e.delta_hz = parse_double(cells[3], row, "delta_hz");
    trace.entries.push_back(e);
    check_time_order(trace, row);
  }
  return trace;
}

}  // namespace pulsecancel::ingest
