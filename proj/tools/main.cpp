// mfl-cli: runs one experiment described by a JSON config and writes its report directory.
//
// Exit status: 0 all acceptance rules pass, 1 a rule fails, 2 configuration error,
// 3 numeric or other runtime error.

#include "commands.hpp"
#include "config.hpp"
#include "report.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  using namespace mfl::cli;
  CLI::App app{"Mean-field Langevin experiments"};
  std::string config_path, output;
  int workers = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* out_opt = app.add_option("--output", output, "output directory (overrides config)");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed (overrides config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    ExperimentConfig cfg = load_config(config_path);
    if (*out_opt) cfg.output = output;
    if (*workers_opt) cfg.workers = workers;
    if (*seed_opt) cfg.seed = seed;
    const std::filesystem::path out(cfg.output);
    std::filesystem::create_directories(out);
    write_json(out / "config.echo.json", echo(cfg));
    const Summary s = run_command(cfg, out);
    write_json(out / "summary.json", s.to_json());
    for (const auto& r : s.rules)
      std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " = " << format_double(r.value) << "\n";
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
    return s.pass() ? 0 : 1;
  } catch (const mfl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_configuration() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: cli.run: " << e.what() << "\n";
    return 3;
  }
}
