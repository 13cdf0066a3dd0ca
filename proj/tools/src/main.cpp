#include <algorithm>
#include <iostream>

#include "commands.hpp"
#include "gprllm/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gprllm: budgeted passage relevance estimation with per-query Gaussian processes"};
  app.require_subcommand(1);
  int exit_code = 0;
  gprllm::cli::register_commands(app, exit_code);
  try {
    auto args = gprllm::cli::expand_config(app, std::vector<std::string>(argv + 1, argv + argc));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return gprllm::exit_code(gprllm::ErrorKind::config);
  } catch (const gprllm::Error& e) {
    std::cerr << "gprllm: " << e.what() << '\n';
    return gprllm::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "gprllm: " << e.what() << '\n';
    return gprllm::exit_code(gprllm::ErrorKind::data);
  }
  return exit_code;
}
