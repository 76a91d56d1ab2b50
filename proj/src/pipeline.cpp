#include "cvdelay/pipeline.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <tuple>

#include "cvdelay/error.hpp"
#include "cvdelay/record_io.hpp"

namespace cvdelay {

namespace fs = std::filesystem;
using gaussian::Quadrature;

namespace {

struct RecordName {
  const char* key;
  TimeSeriesRecord RecordSet::*member;
};

const RecordName kRecordNames[] = {
    {"c_plus", &RecordSet::c_plus},           {"d_plus", &RecordSet::d_plus},
    {"vacuum_plus", &RecordSet::vacuum_plus}, {"c_minus", &RecordSet::c_minus},
    {"d_minus", &RecordSet::d_minus},         {"vacuum_minus", &RecordSet::vacuum_minus},
};

std::string csv(const std::string& header, std::size_t rows,
                const std::function<void(std::ostream&, std::size_t)>& row) {
  std::ostringstream os;
  os << std::setprecision(12) << header << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    row(os, i);
    os << '\n';
  }
  return os.str();
}

std::string ellipse_csv(const metrics::EllipseCurve& e) {
  return csv("theta_rad,sigma", e.theta.size(),
             [&](std::ostream& os, std::size_t i) { os << e.theta[i] << ',' << e.sigma[i]; });
}

std::string psd_csv(const dsp::PsdEstimate& p, const dsp::PsdEstimate& vac) {
  const auto db = dsp::to_qnl_db(p, vac);
  return csv("frequency_hz,power_qnl_db", db.size() - 1,
             [&](std::ostream& os, std::size_t i) { os << p.frequency[i + 1] << ',' << db[i + 1]; });
}

dsp::BasebandRecord calibrated_baseband(const TimeSeriesRecord& rec, const TimeSeriesRecord& vac,
                                        const dsp::BasebandRecord& vac_bb, const AnalysisConfig& a) {
  const auto bb = dsp::downmix(dsp::normalize_to_qnl(rec, vac), a.downmix_frequency, a.cutoff, a.decimation);
  return dsp::normalize_to_qnl(bb, vac_bb);
}

void check_record(const TimeSeriesRecord& r, Quadrature q, Channel ch, const char* name) {
  if (r.samples.empty()) throw InvalidArgument(std::string("record ") + name + " is empty");
  if (r.quadrature != q || r.channel != ch)
    throw InvalidArgument(std::string("record ") + name + " has unexpected quadrature or channel label");
}

RunConfig with_value(RunConfig c, const std::string& var, double v) {
  if (var == "bandwidth") {
    c.window.fwhm_bandwidth = v;
  } else if (var == "peak_transmission") {
    c.window.peak_transmission = v;
    c.window.floor_transmission = std::min(c.window.floor_transmission, v);
  } else if (var == "group_delay") {
    c.window.group_delay = v;
  } else if (var == "squeezing_db") {
    c.source.squeezing_db = v;
  }
  c.sweep.reset();
  c.validate();
  return c;
}

}  // namespace

RecordSet simulate(const RunConfig& cfg) {
  cfg.validate();
  const SpectralModel model = cfg.spectral_model();
  RecordSet out;
  for (const double angle : {0.0, std::numbers::pi / 2}) {
    SimulationConfig sim = cfg.sim;
    sim.homodyne_angle_c = sim.homodyne_angle_d = angle;
    auto pair = synthesize_pair(sim, model, cfg.window);
    auto vac = vacuum_reference(sim);
    if (angle == 0.0) {
      out.c_plus = std::move(pair.c);
      out.d_plus = std::move(pair.d);
      out.vacuum_plus = std::move(vac);
    } else {
      out.c_minus = std::move(pair.c);
      out.d_minus = std::move(pair.d);
      out.vacuum_minus = std::move(vac);
    }
  }
  return out;
}

AnalysisResult analyze(const RecordSet& rs, const AnalysisConfig& a) {
  a.validate();
  if (rs.vacuum_plus.samples.empty() || rs.vacuum_minus.samples.empty())
    throw CalibrationError("missing QNL reference record");
  check_record(rs.c_plus, Quadrature::plus, Channel::c, "c_plus");
  check_record(rs.d_plus, Quadrature::plus, Channel::d, "d_plus");
  check_record(rs.vacuum_plus, Quadrature::plus, Channel::vacuum_ref, "vacuum_plus");
  check_record(rs.c_minus, Quadrature::minus, Channel::c, "c_minus");
  check_record(rs.d_minus, Quadrature::minus, Channel::d, "d_minus");
  check_record(rs.vacuum_minus, Quadrature::minus, Channel::vacuum_ref, "vacuum_minus");
  const double fs = rs.c_plus.sample_rate;
  for (const auto& n : kRecordNames)
    if ((rs.*n.member).sample_rate != fs)
      throw InvalidArgument(std::string("mismatched sample rates: ") + n.key + " differs from c_plus");

  AnalysisResult res;
  const auto vp = dsp::normalize_to_qnl(rs.vacuum_plus, rs.vacuum_plus);
  const auto vm = dsp::normalize_to_qnl(rs.vacuum_minus, rs.vacuum_minus);
  auto vp_bb = dsp::downmix(vp, a.downmix_frequency, a.cutoff, a.decimation);
  auto vm_bb = dsp::downmix(vm, a.downmix_frequency, a.cutoff, a.decimation);
  vp_bb = dsp::normalize_to_qnl(vp_bb, vp_bb);
  vm_bb = dsp::normalize_to_qnl(vm_bb, vm_bb);

  auto cp = calibrated_baseband(rs.c_plus, rs.vacuum_plus, vp_bb, a);
  auto dp = calibrated_baseband(rs.d_plus, rs.vacuum_plus, vp_bb, a);
  auto cm = calibrated_baseband(rs.c_minus, rs.vacuum_minus, vm_bb, a);
  auto dm = calibrated_baseband(rs.d_minus, rs.vacuum_minus, vm_bb, a);

  // Both quadratures carry the delay; keep the estimate with the stronger peak.
  std::string failures;
  for (const auto& [x, y, q] : {std::tuple{&dp, &cp, Quadrature::plus}, std::tuple{&dm, &cm, Quadrature::minus}}) {
    try {
      auto est = dsp::estimate_delay(*x, *y, a.max_lag);
      if (!res.delay || std::abs(est.peak) / est.threshold > std::abs(res.delay->peak) / res.delay->threshold) {
        res.delay = std::move(est);
        res.delay_quadrature = q;
      }
    } catch (const NoCorrelationError& e) {
      failures += (failures.empty() ? "" : "; ") + gaussian::to_string(q) + ": " + e.what();
    }
  }
  if (!res.delay) res.delay_failure = failures;
  if (res.delay) {
    res.g_curve = res.delay->curve.normalized_to(a.reference_peak > 0.0 ? a.reference_peak : res.delay->peak);
    if (a.align_delay) {
      std::tie(dp, cp) = dsp::align(dp, cp, res.delay->tau_hat);
      std::tie(dm, cm) = dsp::align(dm, cm, res.delay->tau_hat);
    }
  }

  res.scatter_plus = metrics::ScatterSet::from_baseband(cp, dp, a.parity);
  res.scatter_minus = metrics::ScatterSet::from_baseband(cm, dm, a.parity);
  metrics::ScatterSet qnl;
  const std::size_t nq = std::min(vp_bb.size(), vm_bb.size());
  qnl.x_c.assign(vp_bb.in_phase.begin(), vp_bb.in_phase.begin() + nq);
  qnl.x_d.assign(vm_bb.in_phase.begin(), vm_bb.in_phase.begin() + nq);

  metrics::ReportOptions opt;
  opt.theta_points = a.theta_points;
  opt.bootstrap_segments = a.bootstrap_segments;
  res.report = metrics::full_report(res.scatter_plus, res.scatter_minus, qnl, opt);
  if (res.delay) {
    res.report.tau_hat = res.delay->tau_hat;
    res.report.g_peak = res.delay->peak;
    res.report.delay_quadrature = res.delay_quadrature;
  }

  const auto psd = [&](const TimeSeriesRecord& r, const TimeSeriesRecord& v) {
    return dsp::estimate_psd(dsp::normalize_to_qnl(r, v), a.psd_segment, a.psd_overlap);
  };
  res.psd_vacuum_plus = dsp::estimate_psd(vp, a.psd_segment, a.psd_overlap);
  res.psd_vacuum_minus = dsp::estimate_psd(vm, a.psd_segment, a.psd_overlap);
  res.psd_c_plus = psd(rs.c_plus, rs.vacuum_plus);
  res.psd_d_plus = psd(rs.d_plus, rs.vacuum_plus);
  res.psd_c_minus = psd(rs.c_minus, rs.vacuum_minus);
  res.psd_d_minus = psd(rs.d_minus, rs.vacuum_minus);
  return res;
}

gaussian::TwoModeCovariance model_covariance(const RunConfig& cfg) {
  return band_covariance(cfg.sim, cfg.spectral_model(), cfg.window, cfg.analysis.downmix_frequency,
                         cfg.analysis.cutoff);
}

std::string manifest_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["format_version"] = kManifestFormatVersion;
  j["record_format_version"] = kRecordFormatVersion;
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.sim.rng_seed;
  j["parameters"] = {
      {"synth", {{"sample_rate", cfg.sim.sample_rate}, {"duration", cfg.sim.duration},
                 {"antialias_cutoff", cfg.sim.antialias_cutoff}, {"visibility_c", cfg.sim.visibility_c},
                 {"visibility_d", cfg.sim.visibility_d}, {"passive_loss", cfg.sim.passive_loss},
                 {"split_reflectivity", cfg.sim.split_reflectivity}, {"split_phase", cfg.sim.split_phase}}},
      {"source", {{"squeezing_db", cfg.source.squeezing_db}, {"antisqueezing_db", cfg.source.antisqueezing_db},
                  {"cavity_rolloff_hz", cfg.source.cavity_rolloff_hz},
                  {"low_freq_corner_hz", cfg.source.low_freq_corner_hz},
                  {"reference", cfg.level_reference == LevelReference::detected ? "detected" : "source"}}},
      {"eit", {{"peak_transmission", cfg.window.peak_transmission}, {"fwhm_bandwidth", cfg.window.fwhm_bandwidth},
               {"group_delay", cfg.window.group_delay}, {"floor_transmission", cfg.window.floor_transmission},
               {"excess_noise", cfg.window.excess_noise}}},
      {"analysis", {{"downmix_frequency", cfg.analysis.downmix_frequency}, {"cutoff", cfg.analysis.cutoff},
                    {"decimation", cfg.analysis.decimation}, {"theta_points", cfg.analysis.theta_points},
                    {"max_lag", cfg.analysis.max_lag}, {"bootstrap_segments", cfg.analysis.bootstrap_segments},
                    {"psd_segment", cfg.analysis.psd_segment}, {"psd_overlap", cfg.analysis.psd_overlap},
                    {"parity", cfg.analysis.parity}, {"align_delay", cfg.analysis.align_delay},
                    {"reference_peak", cfg.analysis.reference_peak}}}};
  j["config"] = cfg.to_text();
  for (const auto& n : kRecordNames) j["records"][n.key] = std::string(n.key) + ".rec";
  return j.dump(2) + "\n";
}

RunConfig config_from_manifest(const fs::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest.string() + ": invalid manifest JSON (" + e.what() + ")");
  }
  if (!j.contains("format_version") || j["format_version"] != kManifestFormatVersion)
    throw IoError(manifest.string() + ": unsupported manifest format version");
  if (!j.contains("config") || !j["config"].is_string())
    throw IoError(manifest.string() + ": manifest lacks the run configuration");
  return parse_config(j["config"].get<std::string>(), manifest.string() + "#config");
}

fs::path write_simulation(const fs::path& dir, const RunConfig& cfg, const RecordSet& rs) {
  const std::string manifest = manifest_json(cfg);
  const std::string cov = model_covariance(cfg).to_text();
  fs::create_directories(dir);
  for (const auto& n : kRecordNames) write_record(dir / (std::string(n.key) + ".rec"), rs.*n.member);
  atomic_write(dir / "model_covariance.txt", cov);
  atomic_write(dir / "manifest.json", manifest);
  return dir / "manifest.json";
}

LoadedRun load_records(const fs::path& path) {
  LoadedRun run;
  fs::path dir = path, manifest;
  if (fs::is_directory(path)) {
    if (fs::exists(path / "manifest.json")) manifest = path / "manifest.json";
  } else {
    manifest = path;
    dir = path.parent_path();
    if (!fs::exists(manifest)) throw IoError("manifest not found: " + manifest.string());
  }
  if (!manifest.empty()) run.config = config_from_manifest(manifest);
  for (const auto& n : kRecordNames) {
    const fs::path p = dir / (std::string(n.key) + ".rec");
    if (!fs::exists(p)) {
      if (std::string(n.key).rfind("vacuum", 0) == 0)
        throw CalibrationError("missing QNL reference record " + p.string());
      throw IoError("missing record " + p.string());
    }
    run.records.*n.member = read_record(p);
  }
  return run;
}

void write_analysis(const fs::path& dir, const AnalysisResult& r) {
  std::vector<std::pair<std::string, std::string>> files;
  std::string report = r.report.to_text();
  if (r.delay_failure) report += "delay_estimate: " + *r.delay_failure + "\n";
  files.emplace_back("report.txt", report);
  files.emplace_back("ellipse_plus.csv", ellipse_csv(r.report.ellipse_plus));
  files.emplace_back("ellipse_minus.csv", ellipse_csv(r.report.ellipse_minus));
  files.emplace_back("ellipse_qnl.csv", ellipse_csv(r.report.ellipse_qnl));
  files.emplace_back("g_tau.csv", csv("lag_s,g", r.g_curve.lags.size(), [&](std::ostream& os, std::size_t i) {
                       os << r.g_curve.lags[i] << ',' << r.g_curve.g[i];
                     }));
  files.emplace_back("psd_c_plus.csv", psd_csv(r.psd_c_plus, r.psd_vacuum_plus));
  files.emplace_back("psd_d_plus.csv", psd_csv(r.psd_d_plus, r.psd_vacuum_plus));
  files.emplace_back("psd_c_minus.csv", psd_csv(r.psd_c_minus, r.psd_vacuum_minus));
  files.emplace_back("psd_d_minus.csv", psd_csv(r.psd_d_minus, r.psd_vacuum_minus));
  files.emplace_back("covariance.txt", r.report.covariance.to_text());
  fs::create_directories(dir);
  for (const auto& [name, body] : files) atomic_write(dir / name, body);
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) throw InvalidArgument("configuration has no [sweep] section");
  cfg.validate();
  const SweepConfig& sw = *cfg.sweep;
  std::vector<RunConfig> points;
  for (double v : sw.values) points.push_back(with_value(cfg, sw.variable, v));

  std::vector<EITWindow> windows;
  for (const auto& p : points) windows.push_back(p.window);
  const auto table = bandwidth_transmission_sweep(windows, sw.probe_frequency);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RunConfig& p = points[i];
    SweepRow row;
    row.value = sw.values[i];
    row.transmission = table[i].transmission;
    SimulationConfig single = p.sim;
    single.split_reflectivity = 0.0;
    const double v = detected_covariance(single, p.spectral_model(), p.window, sw.probe_frequency)(0, 0);
    row.surviving_squeezing_db = -10.0 * std::log10(v);
    if (sw.mode == "analytic") {
      row.duan_i = gaussian::duan_from_minima(model_covariance(p));
      row.tau_hat = p.window.group_delay;
    } else {
      const auto res = analyze(simulate(p), p.analysis);
      row.duan_i = res.report.duan_i;
      row.tau_hat = res.delay ? res.delay->tau_hat : std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const RunConfig& cfg, const std::vector<SweepRow>& rows) {
  const std::string& var = cfg.sweep ? cfg.sweep->variable : std::string("value");
  const std::string first = var == "bandwidth" ? "bandwidth_hz" : var == "group_delay" ? "group_delay_s" : var;
  return csv(first + ",transmission,surviving_squeezing_db,duan_i,tau_hat_s", rows.size(),
             [&](std::ostream& os, std::size_t i) {
               const auto& r = rows[i];
               os << r.value << ',' << r.transmission << ',' << r.surviving_squeezing_db << ',' << r.duan_i
                  << ',' << r.tau_hat;
             });
}

}  // namespace cvdelay
