#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "mmpar/backend.hpp"
#include "mmpar/io.hpp"
#include "mmpar/mm_core.hpp"

namespace mmpar::cli {

struct CommonOptions {
  double epsilon = 1e-9;
  std::size_t max_iters = 100000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::string backend = "serial";
  std::string trace_out;
  std::string manifest_out;

  MmConfig config() const;
  Backend make_backend() const;
};

void add_common_options(CLI::App& app, CommonOptions& common);

// A subcommand and the action to run once it has been parsed.
struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

// Writes trace CSV and manifest when requested.
void emit_run_outputs(const CommonOptions& common, const std::string& solver,
                      const std::map<std::string, double>& parameters,
                      const std::map<std::string, std::string>& inputs, const MmTrace& trace);

void print_summary(const std::string& solver, const MmTrace& trace);

Command add_rosenbrock(CLI::App& root);
Command add_nnmf(CLI::App& root, bool poisson);
Command add_pet(CLI::App& root);
Command add_mds(CLI::App& root);
Command add_gen_phantom(CLI::App& root);
Command add_gen_sysmat(CLI::App& root);
Command add_bench(CLI::App& root);

}  // namespace mmpar::cli
