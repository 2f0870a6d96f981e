#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "commands.hpp"
#include "mmpar/errors.hpp"
#include "mmpar/mds.hpp"
#include "mmpar/nnmf.hpp"
#include "mmpar/pet.hpp"

namespace mmpar::cli {

namespace {

// Published CPU reference runs: (iterations, converged objective). Their data
// (CBCL faces, a simulated PET scan, 2005 House votes) differ from the
// synthetic inputs here, so these are magnitudes to compare against only.
struct Reference {
  double parameter;
  double iters;
  double objective;
};

const std::vector<Reference> kNnmfReference = {
    {10, 25459, 106.2653503}, {20, 87801, 89.56601262}, {30, 55783, 78.42143486},
    {40, 47775, 70.05415929}, {50, 53523, 63.51429261}, {60, 77321, 58.24854375}};
const std::vector<Reference> kPetReference = {{0, 100000, -7337.152765},
                                              {1e-7, 24457, -8500.083033},
                                              {1e-6, 6294, -15432.45496},
                                              {1e-5, 589, -55767.32966}};
const std::vector<Reference> kMdsReference = {
    {2, 3452, 198.5109307},  {3, 15912, 95.55987770},  {4, 15965, 56.83482075},
    {5, 24604, 39.41268434}, {10, 29643, 14.16083986}, {20, 67130, 6.464623901},
    {30, 100000, 4.839570118}};

std::optional<Reference> find_reference(const std::vector<Reference>& table, double parameter) {
  for (const auto& r : table)
    if (r.parameter == parameter) return r;
  return std::nullopt;
}

struct Row {
  std::string suite;
  std::string parameter;
  std::size_t iters = 0;
  bool converged = false;
  double serial_seconds = 0.0;
  double parallel_seconds = 0.0;
  double objective = 0.0;
  std::optional<Reference> reference;

  double speedup() const { return parallel_seconds > 0.0 ? serial_seconds / parallel_seconds : 0.0; }
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string param_label(const char* name, double v) { return std::string(name) + "=" + fmt("%g", v); }

// Runs both backends and insists on identical objective traces.
template <class RunFn>
Row compare(const std::string& suite, const std::string& parameter, const Backend& parallel,
            RunFn&& run) {
  const MmTrace serial = run(Backend::serial());
  const MmTrace par = run(parallel);
  if (!bitwise_equal(serial.objective_values, par.objective_values)) {
    throw NumericalError("bench " + suite + " " + parameter +
                         ": serial and parallel objective traces differ");
  }
  Row row;
  row.suite = suite;
  row.parameter = parameter;
  row.iters = serial.iters;
  row.converged = serial.converged;
  row.serial_seconds = serial.wall_time;
  row.parallel_seconds = par.wall_time;
  row.objective = serial.final_objective();
  return row;
}

void print_table(const std::vector<Row>& rows, std::size_t threads, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %-12s %8s %5s %11s %11s %8s %18s %10s %16s\n", "suite",
                "parameter", "iters", "conv", "serial_s", "parallel_s", "speedup", "objective",
                "ref_iters", "ref_objective");
  out << "parallel backend: " << threads << " threads\n" << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-6s %-12s %8zu %5s %11.3f %11.3f %8.2f %18.10g %10s %16s\n",
                  r.suite.c_str(), r.parameter.c_str(), r.iters, r.converged ? "yes" : "no",
                  r.serial_seconds, r.parallel_seconds, r.speedup(), r.objective,
                  r.reference ? fmt("%.0f", r.reference->iters).c_str() : "-",
                  r.reference ? fmt("%.10g", r.reference->objective).c_str() : "-");
    out << line;
  }
}

void write_csv(const std::vector<Row>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << "suite,parameter,iters,converged,serial_seconds,parallel_seconds,speedup,objective,"
         "ref_iters,ref_objective\n";
  for (const auto& r : rows) {
    out << r.suite << ',' << r.parameter << ',' << r.iters << ',' << (r.converged ? 1 : 0) << ','
        << fmt("%.6f", r.serial_seconds) << ',' << fmt("%.6f", r.parallel_seconds) << ','
        << fmt("%.4f", r.speedup()) << ',' << fmt("%.17g", r.objective) << ','
        << (r.reference ? fmt("%.0f", r.reference->iters) : "") << ','
        << (r.reference ? fmt("%.10g", r.reference->objective) : "") << '\n';
  }
}

}  // namespace

Command add_bench(CLI::App& root) {
  struct Options {
    CommonOptions common;
    std::string suite = "all";
    std::vector<std::size_t> ranks{10, 20, 30};
    std::size_t rows = 200;
    std::size_t cols = 100;
    std::vector<double> mus{0, 1e-7, 1e-6, 1e-5};
    std::size_t grid = 64;
    std::size_t detectors = 64;
    double phantom_scale = 1000.0;
    std::vector<std::size_t> dims{2, 3, 4, 5};
    std::size_t legislators = 100;
    std::size_t roll_calls = 300;
    std::string report_csv;
  };
  auto o = std::make_shared<Options>();
  auto* app = root.add_subcommand("bench", "Serial vs parallel timing over parameter grids");
  add_common_options(*app, o->common);
  app->add_option("--suite", o->suite, "Which grid to run")
      ->capture_default_str()
      ->check(CLI::IsMember({"nnmf", "pet", "mds", "all"}));
  app->add_option("--ranks", o->ranks, "NNMF ranks")->delimiter(',')->capture_default_str();
  app->add_option("--rows", o->rows, "NNMF synthetic rows")->capture_default_str();
  app->add_option("--cols", o->cols, "NNMF synthetic columns")->capture_default_str();
  app->add_option("--mus", o->mus, "PET penalties")->delimiter(',')->capture_default_str();
  app->add_option("--grid", o->grid, "PET pixels per side")->capture_default_str();
  app->add_option("--detectors", o->detectors, "PET detectors")->capture_default_str();
  app->add_option("--phantom-scale", o->phantom_scale, "PET phantom intensity")->capture_default_str();
  app->add_option("--dims", o->dims, "MDS dimensions")->delimiter(',')->capture_default_str();
  app->add_option("--legislators", o->legislators, "MDS synthetic legislators")->capture_default_str();
  app->add_option("--roll-calls", o->roll_calls, "MDS synthetic roll calls")->capture_default_str();
  app->add_option("--report-csv", o->report_csv, "Write the report as CSV");
  return {app, [o] {
            const MmConfig config = o->common.config();
            const std::size_t threads =
                o->common.threads > 0 ? o->common.threads
                                      : std::max(2u, std::thread::hardware_concurrency());
            const Backend parallel = Backend::parallel(threads);
            const bool all = o->suite == "all";
            std::vector<Row> rows;

            if (all || o->suite == "nnmf") {
              const DenseMatrix x = nnmf::synthetic_matrix(o->rows, o->cols, 10, 0.1, config.seed + 1);
              for (std::size_t rank : o->ranks) {
                const nnmf::Problem problem{x, rank};
                Row row = compare("nnmf", param_label("r", rank), parallel, [&](const Backend& b) {
                  return nnmf::run(problem, config, b).trace;
                });
                row.reference = find_reference(kNnmfReference, static_cast<double>(rank));
                rows.push_back(row);
              }
            }
            if (all || o->suite == "pet") {
              pet::Problem problem;
              problem.system = pet::build_system_matrix({o->grid, o->detectors});
              const DenseMatrix truth = pet::phantom(o->grid, o->phantom_scale);
              problem.counts = pet::simulate_counts(truth.values(), problem.system, config.seed);
              problem.neighbors = pet::build_neighborhoods(o->grid);
              for (double mu : o->mus) {
                problem.mu = mu;
                Row row = compare("pet", param_label("mu", mu), parallel, [&](const Backend& b) {
                  return pet::run(problem, config, b).trace;
                });
                row.reference = find_reference(kPetReference, mu);
                rows.push_back(row);
              }
            }
            if (all || o->suite == "mds") {
              const DenseMatrix votes = mds::synthetic_votes(o->legislators, o->roll_calls, config.seed + 1);
              mds::Problem problem{mds::unit_weights(o->legislators), mds::votes_to_dissimilarity(votes), 2};
              for (std::size_t dim : o->dims) {
                problem.dim = dim;
                Row row = compare("mds", param_label("p", dim), parallel, [&](const Backend& b) {
                  return mds::run(problem, config, b, true).trace;
                });
                row.reference = find_reference(kMdsReference, static_cast<double>(dim));
                rows.push_back(row);
              }
            }
            print_table(rows, threads, std::cout);
            std::cout << "serial and parallel objective traces: bitwise identical\n";
            if (!o->report_csv.empty()) write_csv(rows, o->report_csv);
          }};
}

}  // namespace mmpar::cli
