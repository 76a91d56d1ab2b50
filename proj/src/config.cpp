#include "cvdelay/config.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "cvdelay/error.hpp"
#include "cvdelay/record_io.hpp"

namespace cvdelay {

namespace {

constexpr std::uint64_t kDefaultSeed = 2008;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  double d;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw InvalidArgument("expected a number, got '" + v + "'");
  return d;
}

std::uint64_t to_uint(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument("expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw InvalidArgument("integer out of range: '" + v + "'");
  }
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw InvalidArgument("expected true or false, got '" + v + "'");
}

double positive(const std::string& v) {
  const double d = to_double(v);
  if (!(d > 0.0)) throw InvalidArgument("value must be > 0, got " + v);
  return d;
}

double non_negative(const std::string& v) {
  const double d = to_double(v);
  if (!(d >= 0.0)) throw InvalidArgument("value must be >= 0, got " + v);
  return d;
}

double fraction(const std::string& v) {
  const double d = to_double(v);
  if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("value must lie in [0, 1], got " + v);
  return d;
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  if (out.empty()) throw InvalidArgument("empty value list");
  return out;
}

struct Entry {
  std::string section, key, value;
  std::size_t line;
};

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.name", [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw InvalidArgument("scenario name must not be empty");
         c.scenario = v;
       }},
      {"scenario.preset", [](RunConfig&, const std::string&) {}},
      {"scenario.seed", [](RunConfig& c, const std::string& v) { c.sim.rng_seed = to_uint(v); }},
      {"synth.sample_rate", [](RunConfig& c, const std::string& v) { c.sim.sample_rate = positive(v); }},
      {"synth.duration", [](RunConfig& c, const std::string& v) { c.sim.duration = positive(v); }},
      {"synth.antialias_cutoff", [](RunConfig& c, const std::string& v) { c.sim.antialias_cutoff = positive(v); }},
      {"synth.visibility_c", [](RunConfig& c, const std::string& v) { c.sim.visibility_c = fraction(v); }},
      {"synth.visibility_d", [](RunConfig& c, const std::string& v) { c.sim.visibility_d = fraction(v); }},
      {"synth.passive_loss", [](RunConfig& c, const std::string& v) { c.sim.passive_loss = fraction(v); }},
      {"synth.split_reflectivity", [](RunConfig& c, const std::string& v) { c.sim.split_reflectivity = fraction(v); }},
      {"synth.split_phase", [](RunConfig& c, const std::string& v) { c.sim.split_phase = to_double(v); }},
      {"source.squeezing_db", [](RunConfig& c, const std::string& v) { c.source.squeezing_db = non_negative(v); }},
      {"source.antisqueezing_db", [](RunConfig& c, const std::string& v) { c.source.antisqueezing_db = non_negative(v); }},
      {"source.cavity_rolloff_hz", [](RunConfig& c, const std::string& v) { c.source.cavity_rolloff_hz = positive(v); }},
      {"source.low_freq_corner_hz", [](RunConfig& c, const std::string& v) { c.source.low_freq_corner_hz = non_negative(v); }},
      {"source.reference", [](RunConfig& c, const std::string& v) {
         if (v == "source") c.level_reference = LevelReference::source;
         else if (v == "detected") c.level_reference = LevelReference::detected;
         else throw InvalidArgument("reference must be 'source' or 'detected', got '" + v + "'");
       }},
      {"eit.peak_transmission", [](RunConfig& c, const std::string& v) { c.window.peak_transmission = fraction(v); }},
      {"eit.fwhm_bandwidth", [](RunConfig& c, const std::string& v) { c.window.fwhm_bandwidth = positive(v); }},
      {"eit.group_delay", [](RunConfig& c, const std::string& v) { c.window.group_delay = non_negative(v); }},
      {"eit.floor_transmission", [](RunConfig& c, const std::string& v) { c.window.floor_transmission = fraction(v); }},
      {"eit.excess_noise", [](RunConfig& c, const std::string& v) { c.window.excess_noise = non_negative(v); }},
      {"analysis.downmix_frequency", [](RunConfig& c, const std::string& v) { c.analysis.downmix_frequency = non_negative(v); }},
      {"analysis.cutoff", [](RunConfig& c, const std::string& v) { c.analysis.cutoff = positive(v); }},
      {"analysis.decimation", [](RunConfig& c, const std::string& v) { c.analysis.decimation = to_uint(v); }},
      {"analysis.theta_points", [](RunConfig& c, const std::string& v) { c.analysis.theta_points = to_uint(v); }},
      {"analysis.max_lag", [](RunConfig& c, const std::string& v) { c.analysis.max_lag = positive(v); }},
      {"analysis.bootstrap_segments", [](RunConfig& c, const std::string& v) { c.analysis.bootstrap_segments = to_uint(v); }},
      {"analysis.psd_segment", [](RunConfig& c, const std::string& v) { c.analysis.psd_segment = to_uint(v); }},
      {"analysis.psd_overlap", [](RunConfig& c, const std::string& v) { c.analysis.psd_overlap = to_double(v); }},
      {"analysis.parity", [](RunConfig& c, const std::string& v) { c.analysis.parity = to_bool(v); }},
      {"analysis.align_delay", [](RunConfig& c, const std::string& v) { c.analysis.align_delay = to_bool(v); }},
      {"analysis.reference_peak", [](RunConfig& c, const std::string& v) { c.analysis.reference_peak = non_negative(v); }},
      {"output.directory", [](RunConfig& c, const std::string& v) {
         if (v.empty()) throw InvalidArgument("output directory must not be empty");
         c.output_dir = v;
       }},
      {"sweep.variable", [](RunConfig& c, const std::string& v) { c.sweep->variable = v; }},
      {"sweep.values", [](RunConfig& c, const std::string& v) { c.sweep->values = to_list(v); }},
      {"sweep.probe_frequency", [](RunConfig& c, const std::string& v) { c.sweep->probe_frequency = positive(v); }},
      {"sweep.mode", [](RunConfig& c, const std::string& v) { c.sweep->mode = v; }},
      // start/stop/points are expanded after all entries are read.
      {"sweep.start", [](RunConfig&, const std::string& v) { to_double(v); }},
      {"sweep.stop", [](RunConfig&, const std::string& v) { to_double(v); }},
      {"sweep.points", [](RunConfig&, const std::string& v) { to_uint(v); }},
  };
  return table;
}

const std::vector<std::string> kSections = {"scenario", "synth", "source", "eit", "analysis", "output", "sweep"};

std::vector<Entry> tokenize(const std::string& text, const std::string& source,
                            std::map<std::string, std::size_t>& section_lines) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t line = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (auto p = s.find_first_of("#;"); p != std::string::npos) s.erase(p);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(source, line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
        throw ConfigError(source, line, "unknown section [" + section + "]");
      if (section_lines.count(section))
        throw ConfigError(source, line, "section [" + section + "] appears twice");
      section_lines[section] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value', got '" + s + "'");
    if (section.empty()) throw ConfigError(source, line, "key outside of any section");
    Entry e{section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    const std::string full = section + "." + e.key;
    if (!setters().count(full)) throw ConfigError(source, line, "unknown key '" + e.key + "' in [" + section + "]");
    if (auto it = seen.find(full); it != seen.end())
      throw ConfigError(source, line, "duplicate key '" + e.key + "' (first set on line " +
                                          std::to_string(it->second) + ")");
    seen[full] = line;
    out.push_back(std::move(e));
  }
  return out;
}

template <class Fn>
void anchored(const std::string& source, std::size_t line, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(source, line, e.what());
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void AnalysisConfig::validate() const {
  if (!(cutoff > 0.0)) throw InvalidArgument("analysis cutoff must be > 0");
  if (decimation == 0) throw InvalidArgument("decimation must be >= 1");
  if (theta_points < 3) throw InvalidArgument("theta_points must be >= 3");
  if (!(max_lag > 0.0)) throw InvalidArgument("max_lag must be > 0");
  if (bootstrap_segments < 2) throw InvalidArgument("bootstrap_segments must be >= 2");
  if (psd_segment < 2) throw InvalidArgument("psd_segment must be >= 2");
  if (!(psd_overlap >= 0.0 && psd_overlap < 1.0)) throw InvalidArgument("psd_overlap must lie in [0, 1)");
}

void SweepConfig::validate() const {
  static const std::vector<std::string> vars = {"bandwidth", "peak_transmission", "group_delay", "squeezing_db"};
  if (std::find(vars.begin(), vars.end(), variable) == vars.end())
    throw InvalidArgument("sweep variable must be one of bandwidth, peak_transmission, group_delay, squeezing_db");
  if (values.empty()) throw InvalidArgument("empty sweep range");
  if (mode != "analytic" && mode != "pipeline") throw InvalidArgument("sweep mode must be 'analytic' or 'pipeline'");
  if (!(probe_frequency > 0.0)) throw InvalidArgument("probe_frequency must be > 0");
}

void RunConfig::validate() const {
  sim.validate();
  source.validate();
  window.validate();
  analysis.validate();
  if (sweep) sweep->validate();
}

double RunConfig::reference_efficiency() const {
  return (1.0 - sim.passive_loss) * sim.visibility_c * sim.visibility_c;
}

SpectralModel RunConfig::spectral_model() const {
  if (level_reference == LevelReference::detected)
    return SpectralModel::from_detected_levels(source, reference_efficiency());
  return SpectralModel::squeezed_source(source);
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "[scenario]\n"
     << "name = " << scenario << '\n'
     << "seed = " << sim.rng_seed << "\n\n"
     << "[synth]\n"
     << "sample_rate = " << fmt(sim.sample_rate) << '\n'
     << "duration = " << fmt(sim.duration) << '\n'
     << "antialias_cutoff = " << fmt(sim.antialias_cutoff) << '\n'
     << "visibility_c = " << fmt(sim.visibility_c) << '\n'
     << "visibility_d = " << fmt(sim.visibility_d) << '\n'
     << "passive_loss = " << fmt(sim.passive_loss) << '\n'
     << "split_reflectivity = " << fmt(sim.split_reflectivity) << '\n'
     << "split_phase = " << fmt(sim.split_phase) << "\n\n"
     << "[source]\n"
     << "squeezing_db = " << fmt(source.squeezing_db) << '\n'
     << "antisqueezing_db = " << fmt(source.antisqueezing_db) << '\n'
     << "cavity_rolloff_hz = " << fmt(source.cavity_rolloff_hz) << '\n'
     << "low_freq_corner_hz = " << fmt(source.low_freq_corner_hz) << '\n'
     << "reference = " << (level_reference == LevelReference::detected ? "detected" : "source") << "\n\n"
     << "[eit]\n"
     << "peak_transmission = " << fmt(window.peak_transmission) << '\n'
     << "fwhm_bandwidth = " << fmt(window.fwhm_bandwidth) << '\n'
     << "group_delay = " << fmt(window.group_delay) << '\n'
     << "floor_transmission = " << fmt(window.floor_transmission) << '\n'
     << "excess_noise = " << fmt(window.excess_noise) << "\n\n"
     << "[analysis]\n"
     << "downmix_frequency = " << fmt(analysis.downmix_frequency) << '\n'
     << "cutoff = " << fmt(analysis.cutoff) << '\n'
     << "decimation = " << analysis.decimation << '\n'
     << "theta_points = " << analysis.theta_points << '\n'
     << "max_lag = " << fmt(analysis.max_lag) << '\n'
     << "bootstrap_segments = " << analysis.bootstrap_segments << '\n'
     << "psd_segment = " << analysis.psd_segment << '\n'
     << "psd_overlap = " << fmt(analysis.psd_overlap) << '\n'
     << "parity = " << (analysis.parity ? "true" : "false") << '\n'
     << "align_delay = " << (analysis.align_delay ? "true" : "false") << '\n'
     << "reference_peak = " << fmt(analysis.reference_peak) << "\n\n"
     << "[output]\n"
     << "directory = " << output_dir << '\n';
  if (sweep) {
    os << "\n[sweep]\n"
       << "variable = " << sweep->variable << '\n'
       << "values = ";
    for (std::size_t i = 0; i < sweep->values.size(); ++i) os << (i ? ", " : "") << fmt(sweep->values[i]);
    os << '\n'
       << "probe_frequency = " << fmt(sweep->probe_frequency) << '\n'
       << "mode = " << sweep->mode << '\n';
  }
  return os.str();
}

RunConfig parse_config(const std::string& text, const std::string& source_name) {
  std::map<std::string, std::size_t> section_lines;
  const auto entries = tokenize(text, source_name, section_lines);

  RunConfig cfg;
  for (const auto& e : entries)
    if (e.section == "scenario" && e.key == "preset")
      anchored(source_name, e.line, [&] { cfg = preset(e.value); });
  if (section_lines.count("sweep") && !cfg.sweep) cfg.sweep = SweepConfig{};

  std::optional<double> start, stop;
  std::optional<std::size_t> points;
  std::size_t range_line = 0;
  for (const auto& e : entries) {
    anchored(source_name, e.line, [&] {
      setters().at(e.section + "." + e.key)(cfg, e.value);
      if (e.section == "sweep" && e.key == "start") start = to_double(e.value), range_line = e.line;
      if (e.section == "sweep" && e.key == "stop") stop = to_double(e.value), range_line = e.line;
      if (e.section == "sweep" && e.key == "points") points = to_uint(e.value), range_line = e.line;
    });
  }
  if (start || stop || points) {
    anchored(source_name, range_line, [&] {
      if (!start || !stop || !points) throw InvalidArgument("sweep range needs start, stop and points");
      if (*points == 0) throw InvalidArgument("empty sweep range");
      if (!cfg.sweep->values.empty()) throw InvalidArgument("give either values or start/stop/points");
      for (std::size_t i = 0; i < *points; ++i)
        cfg.sweep->values.push_back(*points == 1 ? *start
                                                 : *start + (*stop - *start) * static_cast<double>(i) /
                                                                static_cast<double>(*points - 1));
    });
  }

  auto line_of = [&](const char* s) {
    auto it = section_lines.find(s);
    return it == section_lines.end() ? std::size_t{0} : it->second;
  };
  anchored(source_name, line_of("synth"), [&] { cfg.sim.validate(); });
  anchored(source_name, line_of("source"), [&] {
    cfg.source.validate();
    cfg.spectral_model();
  });
  anchored(source_name, line_of("eit"), [&] { cfg.window.validate(); });
  anchored(source_name, line_of("analysis"), [&] { cfg.analysis.validate(); });
  if (cfg.sweep) anchored(source_name, line_of("sweep"), [&] { cfg.sweep->validate(); });
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(path.string(), 0, e.what());
  }
  return parse_config(text, path.string());
}

std::vector<std::string> preset_names() {
  return {"off_resonance", "eit_buffer_gas", "no_buffer_gas", "eit_long_delay", "squeezing_source",
          "squeezing_eit"};
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.scenario = name;
  c.sim.rng_seed = kDefaultSeed;
  c.source.squeezing_db = 3.2;
  c.source.antisqueezing_db = 12.0;
  c.output_dir = "out/" + name;

  EITWindow eit;
  // Quantum-limited buffer-gas window at the cell transmission ceiling.
  eit.peak_transmission = 0.92;
  eit.fwhm_bandwidth = 60e3;
  eit.group_delay = 2.2e-6;
  eit.floor_transmission = 0.0;
  eit.excess_noise = 0.0;

  if (name == "off_resonance") {
    c.window = EITWindow::transparent();
  } else if (name == "eit_buffer_gas") {
    c.window = eit;
  } else if (name == "eit_long_delay") {
    c.window = eit;
    c.window.group_delay = 3.1e-6;
  } else if (name == "no_buffer_gas") {
    c.window.peak_transmission = 0.5;
    c.window.fwhm_bandwidth = 300e3;
    c.window.group_delay = 2.2e-6;
    c.window.floor_transmission = 0.0;
    c.window.excess_noise = 2.5;
  } else if (name == "squeezing_source" || name == "squeezing_eit") {
    c.level_reference = LevelReference::detected;
    c.sim.split_reflectivity = 0.0;
    c.window = EITWindow::transparent();
    if (name == "squeezing_eit") {
      c.window.peak_transmission = 0.7;
      c.window.fwhm_bandwidth = 300e3;
      c.window.group_delay = 2.2e-6;
      c.window.floor_transmission = 0.0;
    }
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown preset '" + name + "' (known: " + list + ")");
  }
  return c;
}

}  // namespace cvdelay
