// pluvial: command-line front end. Exit codes: 0 success, 1 validation
// error, 2 computation failure.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "pluvial/commands.hpp"
#include "pluvial/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pluvial flood claim-risk pipeline"};
  app.set_version_flag("--version", pluvial::kVersion);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  for (const auto& name : pluvial::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " step");
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out_dir, "override the output directory");
    sub->add_option("--threads", threads, "worker threads (0: all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    pluvial::ConfigOverrides ov;
    ov.seed = seed;
    if (out_dir) ov.output_dir = std::filesystem::absolute(*out_dir);
    ov.threads = threads;
    const auto config = pluvial::load_config(config_path, ov);
    const auto result = pluvial::run_command(command, config);
    for (const auto& w : result.warnings) std::cerr << "pluvial " << command << ": warning: " << w << "\n";
    std::cout << command << ": wrote " << result.outputs.size() << " files under " << config.output_dir.string()
              << "\n";
    return 0;
  } catch (const pluvial::ValidationError& e) {
    std::cerr << "pluvial " << command << ": error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pluvial " << command << ": computation failed: " << e.what() << "\n";
    return 2;
  }
}
