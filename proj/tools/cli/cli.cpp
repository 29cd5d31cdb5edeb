#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pulsecancel/bench.hpp"
#include "pulsecancel/error.hpp"
#include "pulsecancel/ingest.hpp"
#include "pulsecancel/pipeline.hpp"
#include "pulsecancel/scenario.hpp"

namespace pulsecancel::cli {
namespace fs = std::filesystem;
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("PULSECANCEL_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

std::vector<double> split_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("cannot parse '{}' as a number in '{}'", item, text));
    }
  }
  return out;
}

struct InputOptions {
  std::string in;
  std::string scenario;
  std::optional<std::uint64_t> seed;
};

void add_input(CLI::App* app, InputOptions& o) {
  auto* in = app->add_option("--in", o.in, "Raw cube (.bin with .json sidecar)");
  auto* sc = app->add_option("--scenario", o.scenario, "Scenario JSON, synthesized in memory");
  in->excludes(sc);
  app->add_option("--seed", o.seed, "Override the scenario seed");
}

struct LoadedInput {
  RadarCube cube;
  std::optional<synth::Scenario> scenario;
};

LoadedInput load_input(const InputOptions& o) {
  if (o.in.empty() == o.scenario.empty()) throw UsageError("exactly one of --in or --scenario is required");
  LoadedInput li;
  if (!o.scenario.empty()) {
    synth::Scenario s = synth::load_scenario(o.scenario);
    if (o.seed) s.seed = *o.seed;
    li.cube = synth::synthesize_radar_cube(s);
    li.scenario = std::move(s);
  } else if (fs::exists(ingest::sidecar_path(o.in))) {
    li.cube = ingest::read_raw_cube(o.in);
  } else {
    li.cube = ingest::read_raw_cube(o.in, RadarConfig{});
  }
  return li;
}

struct PipelineOptions {
  std::string gate = "0.3:3.0";
  std::size_t enhance_width = 2;
  double min_corr = 0.7;
  double min_magnitude = 0.1;
  std::size_t kb = 3;
  double anls_window = 5.0;
  double anls_step = 1.0;
  std::string rr_grid = "0.1:0.5:0.0016667";
  std::size_t eca_order = 5;
  std::string eca_ridge = "auto";
  double cpi = 20.0;
  double step = 1.0;
  std::size_t pad = 8;
  std::string taper = "hann";
  double ve = 0.1;
  double va = 0.1;
};

void add_pipeline(CLI::App* app, PipelineOptions& o) {
  app->add_option("--gate", o.gate, "Range gate min:max in metres")->capture_default_str();
  app->add_option("--enhance-width", o.enhance_width, "Neighbour bins on each side")->capture_default_str();
  app->add_option("--min-corr", o.min_corr, "Minimum neighbour phase correlation")->capture_default_str();
  app->add_option("--min-magnitude", o.min_magnitude, "Minimum neighbour magnitude relative to the target bin")
      ->capture_default_str();
  app->add_option("--kb", o.kb, "Respiration harmonics in the reference")->capture_default_str();
  app->add_option("--anls-window", o.anls_window, "ANLS subwindow length, s")->capture_default_str();
  app->add_option("--anls-step", o.anls_step, "ANLS subwindow step, s")->capture_default_str();
  app->add_option("--rr-grid", o.rr_grid, "Respiration grid lo:hi:step in Hz")->capture_default_str();
  app->add_option("--eca-order", o.eca_order, "Lag-matrix order M")->capture_default_str();
  app->add_option("--eca-ridge", o.eca_ridge, "Ridge factor, 'auto' or a number")->capture_default_str();
  app->add_option("--cpi", o.cpi, "Analysis window, s")->capture_default_str();
  app->add_option("--step", o.step, "Window step, s")->capture_default_str();
  app->add_option("--pad", o.pad, "Zero-padding factor")->capture_default_str();
  app->add_option("--taper", o.taper, "hann or rectangular")->capture_default_str();
  app->add_option("--ve", o.ve, "Credibility threshold V_e, Hz")->capture_default_str();
  app->add_option("--va", o.va, "Consecutive-estimate threshold V_a, Hz")->capture_default_str();
}

PipelineConfig make_pipeline(const PipelineOptions& o) {
  PipelineConfig pc;
  const auto gate = split_numbers(o.gate, ':');
  if (gate.size() != 2) throw UsageError(fmt::format("--gate expects min:max, got '{}'", o.gate));
  pc.preprocess.gate_min = gate[0];
  pc.preprocess.gate_max = gate[1];
  pc.preprocess.enhance_width = o.enhance_width;
  pc.preprocess.min_corr = o.min_corr;
  pc.preprocess.min_magnitude = o.min_magnitude;

  auto& t = pc.trace;
  t.cpi_s = o.cpi;
  t.step_s = o.step;
  t.spectrum.zero_pad_factor = o.pad;
  try {
    t.spectrum.taper = spectral::parse_taper(o.taper);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  t.anls.order = o.kb;
  t.anls.window_s = o.anls_window;
  t.anls.step_s = o.anls_step;
  const auto grid = split_numbers(o.rr_grid, ':');
  if (grid.size() != 3) throw UsageError(fmt::format("--rr-grid expects lo:hi:step, got '{}'", o.rr_grid));
  t.anls.grid_lo = grid[0];
  t.anls.grid_hi = grid[1];
  t.anls.grid_step = grid[2];
  t.eca.order = o.eca_order;
  if (o.eca_ridge != "auto") {
    const auto r = split_numbers(o.eca_ridge, ',');
    if (r.size() != 1) throw UsageError(fmt::format("--eca-ridge expects 'auto' or a number, got '{}'", o.eca_ridge));
    t.eca.ridge = r[0];
  }
  t.ahet.ve = o.ve;
  t.ahet.va = o.va;
  try {
    t.anls.validate();
    t.eca.validate();
    t.ahet.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return pc;
}

Method method_arg(const std::string& text) {
  try {
    return parse_method(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<Method> methods_arg(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(method_arg(item));
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

// ---- subcommands ----

struct SynthOptions {
  InputOptions input;
  std::string family;
  double duration = 280.0;
  std::string out;
  std::string truth;
  std::string save_scenario;
  double cpi = 20.0;
  double step = 1.0;
  std::optional<double> scale;
};

int run_synth(const SynthOptions& o, std::ostream& out) {
  if (o.input.scenario.empty() == o.family.empty()) throw UsageError("synth needs exactly one of --scenario or --family");
  synth::Scenario s = o.family.empty() ? synth::load_scenario(o.input.scenario)
                                       : synth::make_family_scenario(o.family, o.input.seed.value_or(0), o.duration);
  if (o.input.seed) s.seed = *o.input.seed;
  const fs::path dir = default_out_dir();
  const fs::path cube_path = o.out.empty() ? dir / "cube.bin" : fs::path(o.out);
  const fs::path truth_path = o.truth.empty() ? cube_path.parent_path() / "truth.csv" : fs::path(o.truth);

  const RadarCube cube = synth::synthesize_radar_cube(s);
  const auto header = ingest::write_raw_cube(cube, cube_path, o.scale);
  const double cpi = std::min(o.cpi, s.duration);
  ingest::write_reference_trace(synth::reference_trace(s, cpi, o.step), truth_path);
  if (!o.save_scenario.empty()) synth::save_scenario(s, o.save_scenario);
  out << fmt::format("wrote {} ({} frames x {} samples, scale {:.6g}) and {}\n", cube_path.string(), header.frames,
                     header.fast_time, header.scale, truth_path.string());
  return kOk;
}

struct RunOptions {
  InputOptions input;
  PipelineOptions pipeline;
  std::string method = "ahet";
  std::string out;
};

int run_run(const RunOptions& o, std::ostream& out) {
  const Method method = method_arg(o.method);
  const PipelineConfig pc = make_pipeline(o.pipeline);
  const auto li = load_input(o.input);
  const HrTrace trace = estimate_trace(li.cube, pc, method);
  const fs::path path = o.out.empty() ? default_out_dir() / "trace.csv" : fs::path(o.out);
  ingest::write_trace_csv(trace, path);
  out << fmt::format("wrote {} entries ({}) to {}\n", trace.size(), to_string(method), path.string());
  return kOk;
}

struct CompareOptions {
  InputOptions input;
  PipelineOptions pipeline;
  std::string truth;
  std::string methods = "conventional,eca-conventional,ahet";
};

int run_compare(const CompareOptions& o, std::ostream& out) {
  const auto methods = methods_arg(o.methods);
  const PipelineConfig pc = make_pipeline(o.pipeline);
  const auto li = load_input(o.input);
  HrTrace truth;
  if (!o.truth.empty()) {
    truth = ingest::read_reference_trace(o.truth);
  } else if (li.scenario) {
    truth = synth::reference_trace(*li.scenario, pc.trace.cpi_s, pc.trace.step_s);
  } else {
    throw UsageError("compare needs --truth when reading a cube");
  }
  const PhaseSignal phase = preprocess::phase_from_cube(li.cube, pc.preprocess);
  for (Method m : methods) {
    const HrTrace trace = estimate_trace(phase, pc, m);
    const auto pairs = bench::pair_traces(trace, truth);
    out << fmt::format("{:<17} rmse_bpm={:.3f} paired={}\n", to_string(m), bench::rmse(trace, truth), pairs.size());
  }
  return kOk;
}

struct SpectraOptions {
  InputOptions input;
  PipelineOptions pipeline;
  std::string stage = "both";
  std::string out;
  std::size_t every = 1;
  double max_freq = 4.0;
};

int run_spectra(const SpectraOptions& o, std::ostream& out) {
  if (o.stage != "raw" && o.stage != "eca" && o.stage != "both") throw UsageError("--stage must be raw, eca or both");
  if (o.every == 0) throw UsageError("--every must be >= 1");
  const PipelineConfig pc = make_pipeline(o.pipeline);
  const auto li = load_input(o.input);
  const PhaseSignal phase = preprocess::phase_from_cube(li.cube, pc.preprocess);
  const fs::path dir = o.out.empty() ? default_out_dir() / "spectra" : fs::path(o.out);
  fs::create_directories(dir);

  std::size_t files = 0;
  for (const bool cancelled : {false, true}) {
    if ((cancelled && o.stage == "raw") || (!cancelled && o.stage == "eca")) continue;
    const auto spectra = window_spectra(phase, pc, cancelled);
    for (std::size_t i = 0; i < spectra.size(); i += o.every) {
      const auto& ws = spectra[i];
      const fs::path path = dir / fmt::format("{}_{:04d}.csv", cancelled ? "eca" : "raw", i);
      std::ofstream f(path);
      if (!f) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
      f << "freq_hz,power\n";
      for (std::size_t k = 0; k < ws.spectrum.size() && ws.spectrum.frequencies[k] <= o.max_freq; ++k) {
        f << fmt::format("{:.6g},{:.6g}\n", ws.spectrum.frequencies[k], ws.spectrum.power[k]);
      }
      ++files;
    }
  }
  out << fmt::format("wrote {} spectra to {}\n", files, dir.string());
  return kOk;
}

struct BenchOptions {
  PipelineOptions pipeline;
  std::string family = "masking";
  std::size_t seeds = 20;
  std::uint64_t seed_base = 0;
  std::string cpis = "15,20,30";
  std::string methods = "conventional,eca-conventional,ahet";
  double duration = 280.0;
  unsigned threads = 0;
  bool timing = true;
  std::string out;
};

int run_bench(const BenchOptions& o, std::ostream& out) {
  if (o.seeds < 2) throw UsageError("--seeds must be >= 2");
  bench::MonteCarloConfig mc;
  mc.family = o.family;
  for (std::size_t i = 0; i < o.seeds; ++i) mc.seeds.push_back(o.seed_base + i);
  mc.cpis = split_numbers(o.cpis, ',');
  mc.methods = methods_arg(o.methods);
  mc.duration_s = o.duration;
  mc.pipeline = make_pipeline(o.pipeline);
  mc.primary_cpi = mc.pipeline.trace.cpi_s;
  mc.threads = o.threads;
  try {
    (void)synth::make_family_scenario(o.family, 0, o.duration);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  bench::BenchReport report = bench::monte_carlo(mc);
  if (o.timing) {
    const RadarCube cube = synth::synthesize_radar_cube(synth::make_family_scenario(o.family, mc.seeds.front(), o.duration));
    std::vector<Method> timed{Method::Conventional};
    for (Method m : mc.methods) {
      if (m != Method::Conventional) timed.push_back(m);
    }
    report.timing = bench::time_profile(cube, mc.pipeline, timed);
  }
  const fs::path dir = o.out.empty() ? default_out_dir() / "report" : fs::path(o.out);
  bench::write_report(report, dir);

  for (double cpi : mc.cpis) {
    for (Method m : mc.methods) {
      const auto med = report.median_rmse(cpi, m);
      out << fmt::format("cpi={:g}s {:<17} median_rmse_bpm={}\n", cpi, to_string(m),
                         med ? fmt::format("{:.3f}", *med) : std::string("n/a"));
    }
  }
  for (const auto& t : report.timing) {
    out << fmt::format("timing {:<17} wall_s={:.4f} normalized={:.3f}\n", to_string(t.method), t.wall_s, t.normalized);
  }
  if (report.failures() > 0) out << fmt::format("{} run(s) failed; see report.json\n", report.failures());
  out << fmt::format("wrote report to {}\n", dir.string());
  return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radar heart-rate estimation with respiration-harmonic cancellation", "pulsecancel"};
  app.require_subcommand(1);

  SynthOptions synth_o;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a raw cube and its ground truth");
  synth_cmd->add_option("--scenario", synth_o.input.scenario, "Scenario JSON");
  synth_cmd->add_option("--family", synth_o.family, "Built-in family: masking, harmonic or clean");
  synth_cmd->add_option("--duration", synth_o.duration, "Family record length, s")->capture_default_str();
  synth_cmd->add_option("--seed", synth_o.input.seed, "Override the scenario seed");
  synth_cmd->add_option("--out", synth_o.out, "Cube path (.bin)");
  synth_cmd->add_option("--truth", synth_o.truth, "Ground-truth CSV path");
  synth_cmd->add_option("--save-scenario", synth_o.save_scenario, "Also write the resolved scenario JSON");
  synth_cmd->add_option("--cpi", synth_o.cpi, "Truth window length, s")->capture_default_str();
  synth_cmd->add_option("--step", synth_o.step, "Truth window step, s")->capture_default_str();
  synth_cmd->add_option("--scale", synth_o.scale, "Counts per unit amplitude (default: 90% full scale)");

  RunOptions run_o;
  auto* run_cmd = app.add_subcommand("run", "Estimate a heart-rate trace");
  add_input(run_cmd, run_o.input);
  add_pipeline(run_cmd, run_o.pipeline);
  run_cmd->add_option("--method", run_o.method, "ahet, conventional or eca-conventional")->capture_default_str();
  run_cmd->add_option("--out", run_o.out, "Trace CSV path");

  CompareOptions cmp_o;
  auto* cmp_cmd = app.add_subcommand("compare", "RMSE of each method against a reference trace");
  add_input(cmp_cmd, cmp_o.input);
  add_pipeline(cmp_cmd, cmp_o.pipeline);
  cmp_cmd->add_option("--truth", cmp_o.truth, "Reference CSV (time_s,hr_bpm)");
  cmp_cmd->add_option("--methods", cmp_o.methods, "Comma-separated methods")->capture_default_str();

  SpectraOptions sp_o;
  auto* sp_cmd = app.add_subcommand("spectra", "Dump per-window spectra as CSV");
  add_input(sp_cmd, sp_o.input);
  add_pipeline(sp_cmd, sp_o.pipeline);
  sp_cmd->add_option("--stage", sp_o.stage, "raw, eca or both")->capture_default_str();
  sp_cmd->add_option("--out", sp_o.out, "Output directory");
  sp_cmd->add_option("--every", sp_o.every, "Write every Nth window")->capture_default_str();
  sp_cmd->add_option("--max-freq", sp_o.max_freq, "Highest frequency written, Hz")->capture_default_str();

  BenchOptions b_o;
  auto* b_cmd = app.add_subcommand("bench", "Monte Carlo RMSE and timing report");
  add_pipeline(b_cmd, b_o.pipeline);
  b_cmd->add_option("--family", b_o.family, "Scenario family")->capture_default_str();
  b_cmd->add_option("--seeds", b_o.seeds, "Number of seeds")->capture_default_str();
  b_cmd->add_option("--seed-base", b_o.seed_base, "First seed")->capture_default_str();
  b_cmd->add_option("--cpis", b_o.cpis, "Comma-separated CPIs, s")->capture_default_str();
  b_cmd->add_option("--methods", b_o.methods, "Comma-separated methods")->capture_default_str();
  b_cmd->add_option("--duration", b_o.duration, "Record length, s")->capture_default_str();
  b_cmd->add_option("--threads", b_o.threads, "Worker threads (0: all cores)")->capture_default_str();
  b_cmd->add_flag("!--no-timing", b_o.timing, "Skip the timing profile");
  b_cmd->add_option("--out", b_o.out, "Report directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub != nullptr ? sub->help() : app.help());
    return kUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth_o, out);
    if (*run_cmd) return run_run(run_o, out);
    if (*cmp_cmd) return run_compare(cmp_o, out);
    if (*sp_cmd) return run_spectra(sp_o, out);
    if (*b_cmd) return run_bench(b_o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? kUsage : kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace pulsecancel::cli
