// besov_tool <command> --config <path> [--seed N] [--samples N] [--out path] [--format json|csv]
//
// Exit status: 0 on completion (including refuted or inconclusive verdicts),
// 2 on input errors, 1 on anything else.

#include <CLI11.hpp>

#include <iostream>

#include "besov/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weighted Besov space toolkit on the unit ball of C^n"};
  app.set_version_flag("--version", besov::kToolkitVersion);
  std::string command, config_path, out_path, format;
  std::optional<std::uint64_t> seed, samples;
  app.add_option("command", command, "geom-check | weight-certify | besov-norm | carleson-test | full-suite")
      ->required()
      ->check(CLI::IsMember(besov::known_commands()));
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--samples", samples, "override the configured sample count")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "report path (default: stdout)");
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  besov::RunConfig cfg;
  try {
    cfg = besov::read_config(config_path);
    if (!cfg.command.empty() && cfg.command != command)
      throw besov::InputError("config names command '" + cfg.command + "' but '" + command + "' was requested");
    cfg.command = command;
    if (seed) cfg.seed = *seed;
    if (samples) cfg.samples = *samples;
    if (!out_path.empty()) cfg.out_path = out_path;
    if (!format.empty()) cfg.format = besov::parse_format(format);
    const std::string text = besov::render_report(besov::execute(cfg), cfg.format);
    if (cfg.out_path.empty()) std::cout << text;
    else besov::write_report(text, cfg.out_path);
  } catch (const std::invalid_argument& e) {  // InputError, ConfigError
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const besov::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
