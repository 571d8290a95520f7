// mblnet: dataset generation, gap-ratio baseline, adversarial training,
// prediction, data collapse and figures for the disordered Heisenberg chain.

#include <csignal>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "mbl/config.hpp"
#include "mbl/errors.hpp"
#include "mbl/pipeline.hpp"
#include "mbl/worker_pool.hpp"

namespace {

enum Exit : int { ok = 0, failure = 1, config = 2, capacity = 3, io = 4, divergence = 5, interrupted = 130 };

extern "C" void on_sigint(int) { mbl::cancellation_flag().store(true); }

int run(const std::string& command, const mbl::PipelineConfig& cfg, const mbl::RunOptions& opts) {
  using Fn = void (*)(const mbl::PipelineConfig&, const mbl::RunOptions&);
  static const std::pair<const char*, Fn> table[] = {
      {"generate", mbl::cmd_generate}, {"baseline", mbl::cmd_baseline}, {"train", mbl::cmd_train},
      {"predict", mbl::cmd_predict},   {"collapse", mbl::cmd_collapse}, {"report", mbl::cmd_report}};
  for (auto [name, fn] : table)
    if (command == name) fn(cfg, opts);
  return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Machine-learning phase diagram of the many-body localization transition"};
  app.require_subcommand(1, 1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool force = false;
  app.add_option("--config", config_path, "Pipeline config file")->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "Worker threads over disorder realizations")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--force", force, "Rebuild artifacts that already exist");

  for (const char* name : {"generate", "baseline", "train", "predict", "collapse", "report"}) {
    static const std::map<std::string, std::string> help{
        {"generate", "Build labeled and unlabeled eigenstate sets"},
        {"baseline", "Gap-ratio phase diagram (CSV + SVG)"},
        {"train", "Train one adversarial classifier per system size"},
        {"predict", "Disorder-averaged P(MBL) curves"},
        {"collapse", "Finite-size data collapse per epsilon"},
        {"report", "Phase-diagram and collapse figures"}};
    app.add_subcommand(name, help.at(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::config;
  }

  std::signal(SIGINT, on_sigint);
  try {
    mbl::PipelineConfig cfg = config_path.empty() ? mbl::PipelineConfig{} : mbl::load_pipeline_config(config_path);
    if (workers) cfg.workers = *workers;
    if (seed) cfg.master_seed = *seed;
    if (out) cfg.out = *out;
    cfg.validate();
    mbl::RunOptions opts{force, &std::cerr};
    return run(app.get_subcommands().front()->get_name(), cfg, opts);
  } catch (const mbl::Cancelled&) {
    std::cerr << "interrupted\n";
    return Exit::interrupted;
  } catch (const mbl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return Exit::config;
  } catch (const mbl::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return Exit::config;
  } catch (const mbl::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return Exit::capacity;
  } catch (const mbl::DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << '\n';
    return Exit::divergence;
  } catch (const mbl::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return Exit::io;
  } catch (const mbl::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return Exit::io;
  } catch (const mbl::FormatError& e) {
    std::cerr << "format error (" << mbl::to_string(e.kind()) << "): " << e.what() << '\n';
    return Exit::io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::failure;
  }
}
