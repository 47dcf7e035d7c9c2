#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tsig/linalg.hpp"
#include "tsig_cli/commands.hpp"
#include "tsig_cli/json_writer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tsig: twisted signature invariants on flat tori"};
  std::string command, config_path, out_path;
  unsigned threads = 0, seed = 7;
  app.add_option("command", command, "command to run")->required()->check(CLI::IsMember(tsig::cli::command_names()));
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_path, "output file (stdout when omitted)");
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
  app.add_option("--seed", seed, "seed for randomized checks");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << tsig::cli::write_json_compact({{"error", {{"code", "ConfigInvalid"}, {"pointer", ""}, {"message", e.what()}}}})
              << '\n';
    return 1;
  }
  tsig::set_thread_count(threads);

  try {
    std::optional<tsig::cli::RunConfig> cfg;
    if (!config_path.empty()) cfg = tsig::cli::load_config(config_path);
    const tsig::cli::CommandResult r = tsig::cli::run_command(command, cfg ? &*cfg : nullptr, seed);
    if (out_path.empty()) {
      std::cout << r.output;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << tsig::cli::write_json_compact(
                         {{"error", {{"code", "ConfigInvalid"}, {"pointer", ""}, {"message", "cannot write " + out_path}}}})
                  << '\n';
        return 1;
      }
      out << r.output;
    }
    if (r.exit_code != 0) {
      std::cerr << tsig::cli::write_json_compact(
                       {{"error", {{"code", "IdentityViolated"}, {"module", "cli"}, {"operation", command},
                                   {"message", "one or more checks failed; see the output document"}}}})
                << '\n';
    }
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << tsig::cli::write_json_compact(tsig::cli::error_object(e)) << '\n';
    return tsig::cli::exit_code_for(e);
  }
}
