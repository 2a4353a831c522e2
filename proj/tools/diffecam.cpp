// diffecam: command-line front end.
//
//   diffecam <psf|simulate|edge|baseline|sweep|rolling> [--config FILE] [--key VALUE ...]
//
// Every config key is also a flag (underscores or hyphens). Flags override the
// config file. Exit status: 0 success, 1 usage/config error, 2 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "diffecam/diffecam.hpp"

namespace {

using namespace diffecam;

std::string hyphenate(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return s;
}

void print_record(const MetricsRecord& r) {
  std::printf("%s %s rate=%s psnr_db=%s ie_bits=%s mse=%s\n", r.object_id.c_str(),
              method_name(r.method), format_real(r.sampling_rate).c_str(),
              format_real(r.psnr_db).c_str(), format_real(r.ie_bits).c_str(),
              format_real(r.mse).c_str());
}

int run(const std::string& command, const RunConfig& cfg) {
  if (command == "psf") {
    const auto out = cmd_psf(cfg);
    std::printf("wrote %s (%zux%zu)\n", out.raster.c_str(), out.psf.rows(), out.psf.cols());
  } else if (command == "simulate") {
    const auto out = cmd_simulate(cfg);
    std::printf("wrote %s, %s, %s (%zu of %zu pixels sampled)\n", out.measurement.c_str(),
                out.mask.c_str(), out.object.c_str(),
                count_sampled(out.acquisition.model.mask), out.acquisition.model.mask.size());
  } else if (command == "edge" || command == "baseline") {
    const auto out = command == "edge" ? cmd_edge(cfg) : cmd_baseline(cfg);
    std::printf("wrote %s after %zu iterations (tau=%s)\n", out.raster.c_str(),
                out.solve.iterations, format_real(out.solve.tau).c_str());
    print_record(out.metrics);
  } else if (command == "sweep") {
    const auto out = cmd_sweep(cfg);
    for (const auto& r : out.report.records) print_record(r);
    for (const auto& f : out.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
    std::printf("wrote %s\n", out.csv.c_str());
    if (!out.failures.empty()) return 2;
  } else if (command == "rolling") {
    const auto out = cmd_rolling(cfg);
    for (std::size_t k = 0; k < out.frames.size(); ++k) {
      const auto& f = out.frames[k];
      std::printf("frame %zu t=%.2f ms centroid=(%.2f, %.2f) true=(%.2f, %.2f)\n", k, f.time,
                  f.centroid_x, f.centroid_y, f.true_x, f.true_y);
    }
    std::printf("wrote %s\n", out.trajectory.c_str());
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lensless diffuser camera simulation and direct edge reconstruction"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_file;
  app.add_option("--config", config_file, "key = value config file");

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> flags;
  for (const auto& key : RunConfig::keys()) {
    const std::string name = key.name;
    std::string names = "--" + hyphenate(name);
    if (name.find('_') != std::string::npos) names += ",--" + name;
    flags[name] = app.add_option(names, values[name], key.help);
  }

  const std::pair<const char*, const char*> commands[] = {
      {"psf", "synthesize the speckle PSF"},
      {"simulate", "simulate a static measurement"},
      {"edge", "reconstruct edges directly through the modified PSF"},
      {"baseline", "reconstruct the object, then apply the edge operator"},
      {"sweep", "both methods over objects x sampling rates"},
      {"rolling", "rolling-shutter multi-frame edge recovery of a moving object"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunConfig cfg;
  try {
    if (!config_file.empty()) load_config_file(cfg, config_file);
    for (const auto& key : RunConfig::keys()) {
      if (flags[key.name]->count() > 0) cfg.set(key.name, values[key.name]);
    }
    cfg.validate();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
