#include <fstream>
#include <set>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pulsecancel/error.hpp"
#include "pulsecancel/scenario.hpp"

namespace pulsecancel::synth {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidData, "scenario json: " + msg); }

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) bad(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) bad(fmt::format("unknown key '{}' in {}", key, where));
  }
}

double number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) bad(fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

/// Reads `key` in Hz or `key_bpm` in beats per minute.
double frequency_or(const json& j, const std::string& key, double fallback) {
  const std::string bpm_key = key + "_bpm";
  const bool hz = j.contains(key);
  const bool bpm = j.contains(bpm_key);
  if (hz && bpm) bad(fmt::format("both '{}' and '{}' given", key, bpm_key));
  if (hz) return number(j, key.c_str());
  if (bpm) return bpm_to_hz(number(j, bpm_key.c_str()));
  return fallback;
}

std::vector<Harmonic> harmonics(const json& j, const std::string& prefix, std::size_t default_count,
                                const std::vector<Harmonic>& fallback) {
  const std::string list_key = prefix + "_harmonics";
  const std::string amp_key = prefix + "_amplitude";
  const std::string count_key = prefix + "_harmonic_count";
  if (j.contains(list_key)) {
    if (j.contains(amp_key)) bad(fmt::format("give either '{}' or '{}'", list_key, amp_key));
    const json& arr = j.at(list_key);
    if (!arr.is_array()) bad(fmt::format("'{}' must be an array", list_key));
    std::vector<Harmonic> out;
    for (const json& h : arr) {
      reject_unknown_keys(h, {"amplitude", "phase"}, list_key.c_str());
      out.push_back({number(h, "amplitude"), number_or(h, "phase", 0.0)});
    }
    return out;
  }
  if (j.contains(amp_key)) {
    const double count = number_or(j, count_key.c_str(), static_cast<double>(default_count));
    if (count < 0 || count != static_cast<double>(static_cast<std::size_t>(count))) {
      bad(fmt::format("'{}' must be a non-negative integer", count_key));
    }
    return harmonic_series(number(j, amp_key.c_str()), static_cast<std::size_t>(count),
                           number_or(j, "harmonic_decay", 0.5));
  }
  return fallback;
}

}  // namespace

RadarConfig radar_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"carrier_frequency", "chirp_slope", "bandwidth", "chirp_duration", "adc_samples_per_chirp",
                       "adc_sample_rate", "frame_period", "transmit_power_scale"},
                      "radar");
  RadarConfig c;
  c.carrier_frequency = number_or(j, "carrier_frequency", c.carrier_frequency);
  c.chirp_slope = number_or(j, "chirp_slope", c.chirp_slope);
  if (j.contains("adc_samples_per_chirp")) {
    const json& v = j.at("adc_samples_per_chirp");
    if (!v.is_number_unsigned()) bad("'adc_samples_per_chirp' must be a positive integer");
    c.adc_samples_per_chirp = v.get<std::size_t>();
  }
  c.adc_sample_rate = number_or(j, "adc_sample_rate", c.adc_sample_rate);
  const double window = static_cast<double>(c.adc_samples_per_chirp) / c.adc_sample_rate;
  c.bandwidth = number_or(j, "bandwidth", c.chirp_slope * window);
  c.chirp_duration = number_or(j, "chirp_duration", window);
  c.frame_period = number_or(j, "frame_period", c.frame_period);
  c.transmit_power_scale = number_or(j, "transmit_power_scale", c.transmit_power_scale);
  return c;
}

json radar_to_json(const RadarConfig& c) {
  return json{{"carrier_frequency", c.carrier_frequency},
              {"chirp_slope", c.chirp_slope},
              {"bandwidth", c.bandwidth},
              {"chirp_duration", c.chirp_duration},
              {"adc_samples_per_chirp", c.adc_samples_per_chirp},
              {"adc_sample_rate", c.adc_sample_rate},
              {"frame_period", c.frame_period},
              {"transmit_power_scale", c.transmit_power_scale}};
}

Scenario scenario_from_json(const json& j) {
  try {
    reject_unknown_keys(
        j,
        {"nominal_distance", "breathing_fundamental", "breathing_fundamental_bpm", "breathing_harmonics",
         "breathing_amplitude", "breathing_harmonic_count", "heartbeat_fundamental", "heartbeat_fundamental_bpm",
         "heartbeat_harmonics", "heartbeat_amplitude", "heartbeat_harmonic_count", "harmonic_decay",
         "intermod_tones", "clutter_paths", "phase_noise_std", "complex_noise_std", "duration", "seed",
         "override_amplitude_limits", "radar"},
        "scenario");
    const Scenario defaults = default_scenario();
    Scenario s;
    s.nominal_distance = number_or(j, "nominal_distance", defaults.nominal_distance);
    s.breathing_fundamental = frequency_or(j, "breathing_fundamental", defaults.breathing_fundamental);
    s.heartbeat_fundamental = frequency_or(j, "heartbeat_fundamental", defaults.heartbeat_fundamental);
    s.breathing_harmonics = harmonics(j, "breathing", 4, defaults.breathing_harmonics);
    s.heartbeat_harmonics = harmonics(j, "heartbeat", 2, defaults.heartbeat_harmonics);

    if (j.contains("intermod_tones")) {
      for (const json& t : j.at("intermod_tones")) {
        reject_unknown_keys(t, {"rule", "frequency", "frequency_bpm", "amplitude", "phase", "active", "ramp"},
                            "intermod_tones");
        IntermodTone tone;
        tone.rule = parse_intermod_rule(t.value("rule", std::string("explicit")));
        tone.explicit_frequency = frequency_or(t, "frequency", 0.0);
        if (tone.rule != IntermodRule::Explicit && (t.contains("frequency") || t.contains("frequency_bpm"))) {
          bad("a tone with a frequency rule must not also give a frequency");
        }
        tone.amplitude = number(t, "amplitude");
        tone.phase = number_or(t, "phase", 0.0);
        tone.ramp_s = number_or(t, "ramp", tone.ramp_s);
        if (t.contains("active")) {
          for (const json& iv : t.at("active")) {
            if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) {
              bad("'active' entries must be [start_s, end_s] pairs");
            }
            tone.active.push_back({iv[0].get<double>(), iv[1].get<double>()});
          }
        }
        s.intermod_tones.push_back(std::move(tone));
      }
    }
    if (j.contains("clutter_paths")) {
      for (const json& c : j.at("clutter_paths")) {
        reject_unknown_keys(c, {"range", "amplitude"}, "clutter_paths");
        s.clutter_paths.push_back({number(c, "range"), number(c, "amplitude")});
      }
    }
    s.phase_noise_std = number_or(j, "phase_noise_std", 0.0);
    s.complex_noise_std = number_or(j, "complex_noise_std", 0.0);
    s.duration = number_or(j, "duration", defaults.duration);
    if (j.contains("seed")) {
      const json& seed = j.at("seed");
      if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
        bad("'seed' must be a non-negative integer");
      }
      s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("override_amplitude_limits")) s.override_amplitude_limits = j.at("override_amplitude_limits").get<bool>();
    if (j.contains("radar")) s.radar = radar_from_json(j.at("radar"));
    s.validate();
    return s;
  } catch (const json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::InvalidData, e.what());
    throw;
  }
}

json scenario_to_json(const Scenario& s) {
  auto harm = [](const std::vector<Harmonic>& hs) {
    json arr = json::array();
    for (const auto& h : hs) arr.push_back({{"amplitude", h.amplitude}, {"phase", h.phase}});
    return arr;
  };
  json tones = json::array();
  for (const auto& t : s.intermod_tones) {
    json jt{{"rule", std::string(to_string(t.rule))}, {"amplitude", t.amplitude}, {"phase", t.phase}, {"ramp", t.ramp_s}};
    if (t.rule == IntermodRule::Explicit) jt["frequency"] = t.explicit_frequency;
    if (!t.active.empty()) {
      json act = json::array();
      for (const auto& iv : t.active) act.push_back({iv.start_s, iv.end_s});
      jt["active"] = act;
    }
    tones.push_back(jt);
  }
  json clutter = json::array();
  for (const auto& c : s.clutter_paths) clutter.push_back({{"range", c.range_m}, {"amplitude", c.amplitude}});
  return json{{"nominal_distance", s.nominal_distance},
              {"breathing_fundamental", s.breathing_fundamental},
              {"breathing_harmonics", harm(s.breathing_harmonics)},
              {"heartbeat_fundamental", s.heartbeat_fundamental},
              {"heartbeat_harmonics", harm(s.heartbeat_harmonics)},
              {"intermod_tones", tones},
              {"clutter_paths", clutter},
              {"phase_noise_std", s.phase_noise_std},
              {"complex_noise_std", s.complex_noise_std},
              {"duration", s.duration},
              {"seed", s.seed},
              {"override_amplitude_limits", s.override_amplitude_limits},
              {"radar", radar_to_json(s.radar)}};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open scenario file {}", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidData, fmt::format("{}: {}", path.string(), e.what()));
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write scenario file {}", path.string()));
  out << scenario_to_json(scenario).dump(2) << '\n';
}

}  // namespace pulsecancel::synth
