#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pedhorizon/pedhorizon.hpp"

namespace fs = std::filesystem;
using namespace pedhorizon;

namespace {

constexpr const char* kOutputEnv = "PEDHORIZON_OUTPUT_DIR";

// The environment variable wins over --out so batch jobs can redirect
// every artifact without editing command lines.
fs::path output_dir(const std::string& flag) {
  if (const char* env = std::getenv(kOutputEnv); env && *env) return fs::path(env);
  return fs::path(flag);
}

fs::path output_file(const std::string& flag) {
  if (const char* env = std::getenv(kOutputEnv); env && *env) return fs::path(env) / fs::path(flag).filename();
  return fs::path(flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-horizon requirements from crossing-pedestrian simulations"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config, out, results, metrics_dir, weights;
  unsigned jobs = 0;
  bool resume = false, quiet = false;

  auto* sweep = app.add_subcommand("sweep", "run every scenario x horizon x pedestrian episode");
  sweep->add_option("--config", config, "experiment config (JSON)")->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--jobs", jobs, "worker threads (default: all cores)");
  sweep->add_flag("--resume", resume, "reuse episodes finished by an interrupted run");
  sweep->add_flag("--quiet", quiet, "no progress output");

  auto* metrics = app.add_subcommand("metrics", "compute metric tables from sweep results");
  metrics->add_option("--results", results, "results.csv written by sweep")->required();
  metrics->add_option("--out", out, "output directory")->required();

  auto* derive = app.add_subcommand("derive", "derive required and optimal horizons");
  derive->add_option("--metrics", metrics_dir, "directory written by metrics")->required();
  derive->add_option("--weights", weights, "weight schemes (JSON)")->required();
  derive->add_option("--out", out, "report file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const fs::path dir = output_dir(out);
      DirSweepOptions opt;
      opt.jobs = jobs;
      opt.resume = resume;
      std::size_t last_pct = 101;
      if (!quiet) {
        opt.progress = [&](std::size_t done, std::size_t total) {
          const std::size_t pct = 100 * done / total;
          if (pct / 10 != last_pct / 10 || done == total) {
            std::cerr << "sweep: " << done << "/" << total << " episodes\n";
            last_pct = pct;
          }
        };
      }
      const DirSweepReport rep = run_sweep_to_dir(read_text_file(config), dir, opt);
      std::cout << "sweep: " << rep.total << " episodes (" << rep.reused << " reused) -> "
                << (dir / files::results).string() << "\n";
    } else if (*metrics) {
      const fs::path dir = output_dir(out);
      run_metrics_command(results, dir);
      std::cout << "metrics: tables written to " << dir.string() << "\n";
    } else if (*derive) {
      const fs::path file = output_file(out);
      run_derive_command(metrics_dir, weights, file);
      std::cout << "derive: report written to " << file.string() << " and "
                << derive_json_path(file).string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
