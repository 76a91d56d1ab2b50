// cvdelay: simulate homodyne records through a delay channel and analyze them.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "cvdelay/error.hpp"
#include "cvdelay/pipeline.hpp"
#include "cvdelay/record_io.hpp"

namespace fs = std::filesystem;
using namespace cvdelay;

namespace {

struct ConfigOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_config_options(CLI::App* cmd, ConfigOptions& o) {
  cmd->add_option("--config", o.config, "run configuration file");
  cmd->add_option("--preset", o.preset, "named scenario preset");
  cmd->add_option("--seed", o.seed, "override the RNG seed");
  cmd->add_option("--out", o.out, "output directory");
}

RunConfig resolve_config(const ConfigOptions& o, bool required) {
  if (!o.config.empty() && !o.preset.empty())
    throw InvalidArgument("--config and --preset are exclusive; set [scenario] preset in the file instead");
  RunConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else if (!o.preset.empty()) {
    cfg = preset(o.preset);
  } else if (required) {
    throw InvalidArgument("one of --config or --preset is required");
  }
  if (o.seed) cfg.sim.rng_seed = *o.seed;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const ConfigOptions& o, const RunConfig& cfg) {
  return o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out);
}

// Scatter points for plotting; scale is a display option only.
std::string scatter_csv(const AnalysisResult& r, double scale, std::size_t max_points) {
  std::ostringstream os;
  os.precision(8);
  os << "quadrature,x_c,x_d\n";
  for (const auto* s : {&r.scatter_plus, &r.scatter_minus}) {
    const std::size_t step = std::max<std::size_t>(1, s->size() / std::max<std::size_t>(1, max_points));
    for (std::size_t i = 0; i < s->size(); i += step)
      os << gaussian::to_string(s->quadrature) << ',' << scale * s->x_c[i] << ',' << scale * s->x_d[i] << '\n';
  }
  return os.str();
}

int run(int argc, char** argv) {
  CLI::App app{"Continuous-variable entanglement through a delay channel"};
  app.require_subcommand(1);

  ConfigOptions sim_o;
  auto* sim = app.add_subcommand("simulate", "synthesize amplitude and phase records plus a manifest");
  add_config_options(sim, sim_o);

  ConfigOptions an_o;
  std::string records;
  auto* an = app.add_subcommand("analyze", "analyze stored records");
  an->add_option("path", records, "manifest.json or a directory of records");
  an->add_option("--manifest,--records", records, "manifest.json or a directory of records");
  add_config_options(an, an_o);

  ConfigOptions sw_o;
  auto* sw = app.add_subcommand("sweep", "tabulate metrics over a parameter sweep");
  add_config_options(sw, sw_o);

  ConfigOptions rep_o;
  std::string rep_records;
  double scatter_scale = 1.0;
  std::size_t scatter_points = 5000;
  auto* rep = app.add_subcommand("report", "print a report and write plot data");
  add_config_options(rep, rep_o);
  rep->add_option("--manifest,--records", rep_records, "analyze stored records instead of simulating");
  rep->add_option("--scatter-scale", scatter_scale, "display scale for scatter.csv");
  rep->add_option("--scatter-points", scatter_points, "maximum scatter points per quadrature");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (sim->parsed()) {
    const RunConfig cfg = resolve_config(sim_o, true);
    const RecordSet rs = simulate(cfg);
    std::cout << write_simulation(out_dir(sim_o, cfg), cfg, rs).string() << '\n';
    return 0;
  }

  if (an->parsed()) {
    if (records.empty()) throw InvalidArgument("analyze needs a manifest or record directory");
    LoadedRun run = load_records(records);
    RunConfig cfg = run.config ? *run.config : RunConfig{};
    if (!an_o.config.empty() || !an_o.preset.empty()) cfg = resolve_config(an_o, false);
    const AnalysisResult res = analyze(run.records, cfg.analysis);
    fs::path dir = an_o.out;
    if (dir.empty()) dir = (fs::is_directory(records) ? fs::path(records) : fs::path(records).parent_path()) / "analysis";
    write_analysis(dir, res);
    std::cout << res.report.to_text();
    if (res.delay_failure) std::cout << "delay_estimate: " << *res.delay_failure << '\n';
    return 0;
  }

  if (sw->parsed()) {
    const RunConfig cfg = resolve_config(sw_o, true);
    const std::string table = sweep_csv(cfg, run_sweep(cfg));
    if (sw_o.out.empty()) {
      std::cout << table;
    } else {
      fs::create_directories(sw_o.out);
      atomic_write(fs::path(sw_o.out) / "sweep.csv", table);
    }
    return 0;
  }

  if (rep->parsed()) {
    AnalysisResult res;
    fs::path dir;
    if (!rep_records.empty()) {
      LoadedRun run = load_records(rep_records);
      RunConfig cfg = run.config ? *run.config : RunConfig{};
      if (!rep_o.config.empty() || !rep_o.preset.empty()) cfg = resolve_config(rep_o, false);
      res = analyze(run.records, cfg.analysis);
      dir = rep_o.out;
    } else {
      const RunConfig cfg = resolve_config(rep_o, true);
      res = analyze(simulate(cfg), cfg.analysis);
      dir = out_dir(rep_o, cfg);
    }
    if (!dir.empty()) {
      write_analysis(dir, res);
      atomic_write(dir / "scatter.csv", scatter_csv(res, scatter_scale, scatter_points));
    }
    std::cout << res.report.to_text();
    if (res.delay_failure) std::cout << "delay_estimate: " << *res.delay_failure << '\n';
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "cvdelay: config error: " << e.what() << '\n';
    return 2;
  } catch (const CalibrationError& e) {
    std::cerr << "cvdelay: calibration error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "cvdelay: " << e.what() << '\n';
    return 1;
  }
}
