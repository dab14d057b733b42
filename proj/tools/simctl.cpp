// simctl: batch front-end for the workbench experiments.
//   simctl validate <config.json>
//   simctl run <config.json> --out <dir> [--threads N] [--log-level L]
// Exit codes: 0 success, 2 invalid config, 3 dimension cap exceeded,
// 4 solver failure. Errors are reported as machine-readable JSON on stderr.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lgw/experiments.hpp"

namespace {

int fail(int code, const std::string& message) {
  nlohmann::ordered_json err;
  err["error"]["code"] = code;
  err["error"]["message"] = message;
  std::cerr << err.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact-realization workbench for lattice gauge theory "
               "simulators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  std::string log_level = "info";

  CLI::App* cmd_validate =
      app.add_subcommand("validate", "parse a config and print diagnostics");
  cmd_validate->add_option("config", config_path, "JSON config file")
      ->required();

  CLI::App* cmd_run =
      app.add_subcommand("run", "run an experiment and write its bundle");
  cmd_run->add_option("config", config_path, "JSON config file")->required();
  cmd_run->add_option("--out", out_dir, "output directory");
  cmd_run->add_option("--threads", threads, "worker threads for sweeps");
  cmd_run->add_option("--log-level", log_level, "quiet | info");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, e.what());
  }

  try {
    lgw::ExperimentConfig cfg = lgw::load_config(config_path);
    if (cmd_validate->parsed()) {
      lgw::ValidationReport rep = lgw::validate(cfg);
      std::cout << rep.text();
      return rep.ok ? 0 : fail(2, "config invalid");
    }
    lgw::RunBundle bundle = lgw::run_experiment(cfg, out_dir, threads);
    if (log_level != "quiet") {
      std::cout << bundle.summary << "\n";
      for (const std::string& f : bundle.files) std::cout << "  " << f << "\n";
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    return fail(2, e.what());
  } catch (const lgw::DimensionCapError& e) {
    return fail(3, e.what());
  } catch (const lgw::SolverError& e) {
    return fail(4, e.what());
  } catch (const std::exception& e) {
    const std::string w = e.what();
    return fail(w.find("dimension cap") != std::string::npos ? 3 : 4, w);
  }
}
