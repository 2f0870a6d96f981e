#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <thread>

#include "mmpar/errors.hpp"
#include "mmpar/kernels.hpp"
#include "mmpar/mds.hpp"
#include "mmpar/nnmf.hpp"
#include "mmpar/pet.hpp"
#include "mmpar/rosenbrock.hpp"

namespace mmpar::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Loads a matrix and records its digest under the given path.
DenseMatrix load_input(const std::string& path, std::map<std::string, std::string>& inputs) {
  DenseMatrix m = io::load_matrix(path);
  inputs[path] = io::file_sha256(path);
  return m;
}

void write_basis_images(const DenseMatrix& w, const std::string& prefix) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(w.cols()))));
  if (side * side != w.cols()) {
    throw InputError("--basis-pgm needs square images, but rows of W have " +
                     std::to_string(w.cols()) + " entries");
  }
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const auto row = w.row(k);
    io::write_pgm(DenseMatrix(side, side, std::vector<double>(row.begin(), row.end())),
                  prefix + std::to_string(k) + ".pgm");
  }
}

}  // namespace

MmConfig CommonOptions::config() const {
  MmConfig c;
  c.epsilon = epsilon;
  c.max_iters = max_iters;
  c.seed = seed;
  c.validate();
  return c;
}

Backend CommonOptions::make_backend() const {
  if (backend == "serial") return Backend::serial();
  const std::size_t n = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  return Backend::parallel(n);
}

void add_common_options(CLI::App& app, CommonOptions& common) {
  app.add_option("--epsilon", common.epsilon, "Relative-change stopping threshold")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--max-iters", common.max_iters, "Iteration cap")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads for the parallel backend (0 = all)")
      ->capture_default_str();
  app.add_option("--backend", common.backend, "Kernel backend")
      ->capture_default_str()
      ->check(CLI::IsMember({"serial", "parallel"}));
  app.add_option("--trace-out", common.trace_out, "Write the objective trace as CSV");
  app.add_option("--manifest-out", common.manifest_out, "Write a JSON run manifest");
}

void emit_run_outputs(const CommonOptions& common, const std::string& solver,
                      const std::map<std::string, double>& parameters,
                      const std::map<std::string, std::string>& inputs, const MmTrace& trace) {
  if (!common.trace_out.empty()) write_trace_csv(trace, common.trace_out);
  if (!common.manifest_out.empty()) {
    io::RunManifest m;
    m.solver = solver;
    m.epsilon = common.epsilon;
    m.max_iters = common.max_iters;
    m.seed = common.seed;
    m.parameters = parameters;
    m.backend = common.make_backend().describe();
    m.input_digests = inputs;
    m.converged = trace.converged;
    m.final_objective = trace.final_objective();
    m.iterations = trace.iters;
    m.wall_time = trace.wall_time;
    io::write_manifest(m, common.manifest_out);
  }
}

void print_summary(const std::string& solver, const MmTrace& trace) {
  std::cout << "solver: " << solver << '\n'
            << "iterations: " << trace.iters << '\n'
            << "converged: " << (trace.converged ? "true" : "false") << '\n'
            << "objective: " << fmt(trace.final_objective()) << '\n'
            << "seconds: " << fmt(trace.wall_time) << '\n';
}

Command add_rosenbrock(CLI::App& root) {
  struct Options {
    CommonOptions common;
    std::vector<double> start{-1.0, -1.0};
  };
  auto o = std::make_shared<Options>();
  auto* app = root.add_subcommand("rosenbrock", "MM iteration on the Rosenbrock function");
  add_common_options(*app, o->common);
  app->add_option("--start", o->start, "Starting point x1 x2")->expected(2)->capture_default_str();
  return {app, [o] {
            const rosenbrock::Point x0{o->start[0], o->start[1]};
            const auto r = run_mm(rosenbrock::problem(), x0, o->common.config());
            print_summary("rosenbrock", r.trace);
            std::cout << "point: " << fmt(r.state[0]) << ' ' << fmt(r.state[1]) << '\n';
            emit_run_outputs(o->common, "rosenbrock", {{"x1_start", x0[0]}, {"x2_start", x0[1]}},
                             {}, r.trace);
          }};
}

Command add_nnmf(CLI::App& root, bool poisson) {
  struct Options {
    CommonOptions common;
    std::string input;
    std::size_t rank = 0;
    bool cbcl = false;
    std::size_t rows = 200;
    std::size_t cols = 100;
    std::size_t true_rank = 10;
    double noise = 0.1;
    std::string out_v, out_w, out_fit, basis_pgm;
  };
  auto o = std::make_shared<Options>();
  const std::string name = poisson ? "nnmf-poisson" : "nnmf";
  auto* app = root.add_subcommand(
      name, poisson ? "Poisson-loss NNMF by square-root multiplicative updates"
                    : "Frobenius-loss NNMF by multiplicative updates");
  add_common_options(*app, o->common);
  app->add_option("--input", o->input, "Data matrix (.csv or binary)")->check(CLI::ExistingFile);
  app->add_option("--rank", o->rank, "Factorization rank")->required()->check(CLI::PositiveNumber);
  app->add_flag("--cbcl", o->cbcl, "Scale rows to mean and sd 0.25, clamp to [0, 1]");
  app->add_option("--rows", o->rows, "Synthetic data rows (without --input)")->capture_default_str();
  app->add_option("--cols", o->cols, "Synthetic data columns (without --input)")->capture_default_str();
  app->add_option("--true-rank", o->true_rank, "Synthetic data rank")->capture_default_str();
  app->add_option("--noise", o->noise, "Synthetic data noise amplitude")->capture_default_str();
  app->add_option("--out-v", o->out_v, "Write V");
  app->add_option("--out-w", o->out_w, "Write W");
  app->add_option("--out-fit", o->out_fit, "Write V W");
  app->add_option("--basis-pgm", o->basis_pgm, "Write each row of W as <prefix><k>.pgm");
  return {app, [o, name, poisson] {
            std::map<std::string, std::string> inputs;
            DenseMatrix x = o->input.empty()
                                ? nnmf::synthetic_matrix(o->rows, o->cols, o->true_rank, o->noise,
                                                         o->common.seed + 1)
                                : load_input(o->input, inputs);
            if (o->cbcl) {
              auto scaled = nnmf::cbcl_preprocess(x);
              std::cout << "clamped_fraction: " << fmt(scaled.clamped_fraction) << '\n';
              x = std::move(scaled.matrix);
            }
            const nnmf::Problem problem{x, o->rank};
            if (!problem.validate()) {
              std::cerr << "warning: rank " << o->rank << " exceeds min(p, q)\n";
            }
            const Backend backend = o->common.make_backend();
            const auto r = poisson ? nnmf::run_poisson(problem, o->common.config(), backend)
                                   : nnmf::run(problem, o->common.config(), backend);
            print_summary(name, r.trace);
            if (!o->out_v.empty()) io::save_matrix(r.state.v, o->out_v);
            if (!o->out_w.empty()) io::save_matrix(r.state.w, o->out_w);
            if (!o->out_fit.empty()) io::save_matrix(matmul(r.state.v, r.state.w, backend), o->out_fit);
            if (!o->basis_pgm.empty()) write_basis_images(r.state.w, o->basis_pgm);
            emit_run_outputs(o->common, name,
                             {{"rank", static_cast<double>(o->rank)},
                              {"rows", static_cast<double>(x.rows())},
                              {"cols", static_cast<double>(x.cols())}},
                             inputs, r.trace);
          }};
}

Command add_pet(CLI::App& root) {
  struct Options {
    CommonOptions common;
    std::size_t grid = 64;
    std::size_t detectors = 64;
    double mu = 0.0;
    double scale = 1000.0;
    std::string truth, system, image_out, csv_out, counts_out;
  };
  auto o = std::make_shared<Options>();
  auto* app = root.add_subcommand("pet", "Penalized PET reconstruction on a simulated phantom");
  add_common_options(*app, o->common);
  app->add_option("--grid", o->grid, "Pixels per side")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--detectors", o->detectors, "Detectors on the ring")->capture_default_str();
  app->add_option("--mu", o->mu, "Roughness penalty")->capture_default_str()->check(CLI::NonNegativeNumber);
  app->add_option("--phantom-scale", o->scale, "Intensity multiplier of the built-in phantom")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--truth", o->truth, "True image (grid x grid) instead of the phantom")
      ->check(CLI::ExistingFile);
  app->add_option("--system", o->system, "Precomputed system matrix")->check(CLI::ExistingFile);
  app->add_option("--image-out", o->image_out, "Reconstruction as 16-bit PGM");
  app->add_option("--csv-out", o->csv_out, "Reconstruction as a grid x grid matrix");
  app->add_option("--counts-out", o->counts_out, "Simulated counts as a column");
  return {app, [o] {
            std::map<std::string, std::string> inputs;
            const DenseMatrix truth =
                o->truth.empty() ? pet::phantom(o->grid, o->scale) : load_input(o->truth, inputs);
            if (truth.rows() != o->grid || truth.cols() != o->grid) {
              throw InputError("true image is " + shape_string(truth) + ", expected " +
                               std::to_string(o->grid) + "x" + std::to_string(o->grid));
            }
            pet::Problem problem;
            problem.system = o->system.empty()
                                 ? pet::build_system_matrix({o->grid, o->detectors})
                                 : load_input(o->system, inputs);
            problem.counts = pet::simulate_counts(truth.values(), problem.system, o->common.seed);
            problem.mu = o->mu;
            problem.neighbors = pet::build_neighborhoods(o->grid);
            if (!o->counts_out.empty()) io::save_matrix(DenseMatrix::column(problem.counts), o->counts_out);

            const auto r = pet::run(problem, o->common.config(), o->common.make_backend());
            print_summary("pet", r.trace);
            std::cout << "rays: " << problem.rays() << '\n'
                      << "mse: " << fmt(pet::mean_squared_error(r.state, truth.values())) << '\n';
            const DenseMatrix image(o->grid, o->grid, r.state);
            if (!o->image_out.empty()) io::write_pgm(image, o->image_out);
            if (!o->csv_out.empty()) io::save_matrix(image, o->csv_out);
            emit_run_outputs(o->common, "pet",
                             {{"mu", o->mu},
                              {"grid", static_cast<double>(o->grid)},
                              {"detectors", static_cast<double>(o->detectors)},
                              {"phantom_scale", o->scale}},
                             inputs, r.trace);
          }};
}

Command add_mds(CLI::App& root) {
  struct Options {
    CommonOptions common;
    std::string dissimilarities, votes, weights, coords_out;
    std::size_t dim = 2;
    bool no_anchor = false;
    std::size_t legislators = 100;
    std::size_t roll_calls = 300;
  };
  auto o = std::make_shared<Options>();
  auto* app = root.add_subcommand("mds", "Multidimensional scaling by stress majorization");
  add_common_options(*app, o->common);
  auto* dis = app->add_option("--dissimilarities", o->dissimilarities, "Symmetric q x q matrix")
                  ->check(CLI::ExistingFile);
  app->add_option("--votes", o->votes, "q x m roll-call matrix, entries 1 / -1 / 0")
      ->check(CLI::ExistingFile)
      ->excludes(dis);
  app->add_option("--weights", o->weights, "Symmetric q x q weights (default 1)")->check(CLI::ExistingFile);
  app->add_option("--dim", o->dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_flag("--no-anchor", o->no_anchor, "Skip the final rigid anchoring");
  app->add_option("--legislators", o->legislators, "Synthetic vote rows (no input given)")->capture_default_str();
  app->add_option("--roll-calls", o->roll_calls, "Synthetic vote columns (no input given)")->capture_default_str();
  app->add_option("--coords-out", o->coords_out, "Coordinates, q rows x p columns");
  return {app, [o] {
            std::map<std::string, std::string> inputs;
            mds::Problem problem;
            problem.dim = o->dim;
            if (!o->dissimilarities.empty()) {
              problem.dissimilarities = load_input(o->dissimilarities, inputs);
            } else {
              const DenseMatrix votes =
                  o->votes.empty() ? mds::synthetic_votes(o->legislators, o->roll_calls, o->common.seed + 1)
                                   : load_input(o->votes, inputs);
              problem.dissimilarities = mds::votes_to_dissimilarity(votes);
            }
            problem.weights = o->weights.empty() ? mds::unit_weights(problem.dissimilarities.rows())
                                                 : load_input(o->weights, inputs);
            const auto r = mds::run(problem, o->common.config(), o->common.make_backend(), !o->no_anchor);
            print_summary("mds", r.trace);
            if (!o->coords_out.empty()) io::save_matrix(r.state.transposed(), o->coords_out);
            emit_run_outputs(o->common, "mds",
                             {{"dim", static_cast<double>(o->dim)},
                              {"objects", static_cast<double>(problem.objects())},
                              {"anchored", o->no_anchor ? 0.0 : 1.0}},
                             inputs, r.trace);
          }};
}

Command add_gen_phantom(CLI::App& root) {
  struct Options {
    std::size_t grid = 64;
    double scale = 1000.0;
    std::string out, pgm;
  };
  auto o = std::make_shared<Options>();
  auto* app = root.add_subcommand("gen-phantom", "Write the disk phantom image");
  app->add_option("--grid", o->grid, "Pixels per side")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--scale", o->scale, "Intensity multiplier")->capture_default_str();
  app->add_option("--out", o->out, "Output matrix (.csv or binary)")->required();
  app->add_option("--pgm", o->pgm, "Also write a PGM rendering");
  return {app, [o] {
            const DenseMatrix img = pet::phantom(o->grid, o->scale);
            io::save_matrix(img, o->out);
            if (!o->pgm.empty()) io::write_pgm(img, o->pgm);
            std::cout << "wrote " << o->out << " (" << shape_string(img) << ")\n";
          }};
}

Command add_gen_sysmat(CLI::App& root) {
  struct Options {
    std::size_t grid = 64;
    std::size_t detectors = 64;
    std::string out;
  };
  auto o = std::make_shared<Options>();
  auto* app = root.add_subcommand("gen-sysmat", "Write the PET system matrix");
  app->add_option("--grid", o->grid, "Pixels per side")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--detectors", o->detectors, "Detectors on the ring")->capture_default_str();
  app->add_option("--out", o->out, "Output matrix (.csv or binary)")->required();
  return {app, [o] {
            const DenseMatrix e = pet::build_system_matrix({o->grid, o->detectors});
            io::save_matrix(e, o->out);
            std::cout << "wrote " << o->out << " (" << shape_string(e) << ")\n";
          }};
}

}  // namespace mmpar::cli
