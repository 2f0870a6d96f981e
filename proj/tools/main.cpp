#include <CLI11.hpp>
#include <iostream>
#include <vector>

#include "commands.hpp"
#include "mmpar/errors.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string usage_for(const CLI::App& root, const std::vector<mmpar::cli::Command>& commands) {
  for (const auto& c : commands)
    if (c.app->parsed()) return c.app->help();
  return root.help();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel majorization-minimization solvers and benchmarks", "mmpar"};
  app.require_subcommand(1);
  std::vector<mmpar::cli::Command> commands{
      mmpar::cli::add_nnmf(app, false), mmpar::cli::add_nnmf(app, true),
      mmpar::cli::add_pet(app),         mmpar::cli::add_mds(app),
      mmpar::cli::add_rosenbrock(app),  mmpar::cli::add_bench(app),
      mmpar::cli::add_gen_phantom(app), mmpar::cli::add_gen_sysmat(app)};

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << usage_for(app, commands);
    return kExitInput;
  }

  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) c.run();
    }
  } catch (const mmpar::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const mmpar::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n\n" << usage_for(app, commands);
    return kExitInput;
  }
  return 0;
}
