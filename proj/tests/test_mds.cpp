#include <doctest.h>

#include <cmath>
#include <random>

#include "mmpar/kernels.hpp"
#include "mmpar/mds.hpp"
#include "test_support.hpp"

using namespace mmpar;
using namespace mmpar::testing;

namespace {

const Backend kSerial = Backend::serial();

double dist(const DenseMatrix& t, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < t.rows(); ++k) s += (t(k, i) - t(k, j)) * (t(k, i) - t(k, j));
  return std::sqrt(s);
}

mds::Problem random_problem(std::size_t q, std::size_t p, std::uint64_t seed) {
  mds::Problem prob;
  prob.dim = p;
  prob.weights = DenseMatrix(q, q);
  prob.dissimilarities = DenseMatrix(q, q);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.2, 2.0), y(0.1, 3.0);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i + 1; j < q; ++j) {
      prob.weights(i, j) = prob.weights(j, i) = w(rng);
      prob.dissimilarities(i, j) = prob.dissimilarities(j, i) = y(rng);
    }
  return prob;
}

// The displayed per-coordinate update as a direct double loop.
DenseMatrix direct_update(const DenseMatrix& t, const mds::Problem& prob) {
  const std::size_t q = prob.objects();
  DenseMatrix out(t.rows(), q);
  for (std::size_t i = 0; i < q; ++i) {
    double wsum = 0.0;
    for (std::size_t j = 0; j < q; ++j)
      if (j != i) wsum += prob.weights(i, j);
    for (std::size_t k = 0; k < t.rows(); ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        if (j == i) continue;
        const double d = dist(t, i, j);
        s += prob.weights(i, j) * prob.dissimilarities(i, j) * (t(k, i) - t(k, j)) / d +
             prob.weights(i, j) * (t(k, i) + t(k, j));
      }
      out(k, i) = s / (2.0 * wsum);
    }
  }
  return out;
}

DenseMatrix random_rotation(std::size_t p, std::uint64_t seed) {
  // Gram-Schmidt on a random matrix.
  auto a = random_matrix(p, p, seed, -1, 1);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double dot = 0.0;
      for (std::size_t r = 0; r < p; ++r) dot += a(r, c) * a(r, prev);
      for (std::size_t r = 0; r < p; ++r) a(r, c) -= dot * a(r, prev);
    }
    double n = 0.0;
    for (std::size_t r = 0; r < p; ++r) n += a(r, c) * a(r, c);
    for (std::size_t r = 0; r < p; ++r) a(r, c) /= std::sqrt(n);
  }
  return a;
}

}  // namespace

TEST_CASE("stress examples") {
  mds::Problem two{mds::unit_weights(2), DenseMatrix::from_rows({{0, 2}, {2, 0}}), 1};
  CHECK(mds::stress(DenseMatrix::from_rows({{0, 1}}), two, kSerial) == 1.0);

  const auto pts = random_matrix(3, 6, 4, -1, 1);
  mds::Problem exact{mds::unit_weights(6), DenseMatrix(6, 6), 3};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) exact.dissimilarities(i, j) = dist(pts, i, j);
  CHECK(mds::stress(pts, exact, kSerial) < 1e-28);
}

TEST_CASE("stress matches direct summation and is invariant under rigid motions") {
  for (int t = 0; t < 20; ++t) {
    const auto prob = random_problem(7, 3, 10 + t);
    const auto theta = random_matrix(3, 7, 20 + t, -1, 1);
    double want = 0.0;
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = i + 1; j < 7; ++j) {
        const double r = prob.dissimilarities(i, j) - dist(theta, i, j);
        want += prob.weights(i, j) * r * r;
      }
    const double s = mds::stress(theta, prob, kSerial);
    CHECK(relative_error(s, want) < 1e-12);

    auto moved = matmul(random_rotation(3, 30 + t), theta, kSerial);
    for (std::size_t i = 0; i < 7; ++i) {
      moved(0, i) += 1.5;
      moved(2, i) -= 0.7;
    }
    CHECK(relative_error(mds::stress(moved, prob, kSerial), s) < 1e-10);
    CHECK(relative_error(mds::stress(mds::anchor(theta), prob, kSerial), s) < 1e-10);
  }
}

TEST_CASE("update examples") {
  mds::Problem two{mds::unit_weights(2), DenseMatrix::from_rows({{0, 2}, {2, 0}}), 1};
  const auto next = mds::update(DenseMatrix::from_rows({{0, 1}}), two, kSerial);
  CHECK(next(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(next(0, 1) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(mds::stress(next, two, kSerial) < 1e-28);

  mds::Problem fixed{mds::unit_weights(2), DenseMatrix::from_rows({{0, 3}, {3, 0}}), 1};
  const auto same = mds::update(DenseMatrix::from_rows({{0, 3}}), fixed, kSerial);
  CHECK(same(0, 0) == doctest::Approx(0.0));
  CHECK(same(0, 1) == doctest::Approx(3.0));
}

TEST_CASE("matrix form agrees with the direct-sum form") {
  for (auto [q, p] : {std::pair<std::size_t, std::size_t>{6, 3}, {2, 1}, {9, 2}, {20, 5}}) {
    for (int t = 0; t < 10; ++t) {
      const auto prob = random_problem(q, p, 100 * q + t);
      const auto theta = random_matrix(p, q, 200 * q + t, -1, 1);
      CHECK(relative_frobenius_error(mds::update(theta, prob, kSerial),
                                     direct_update(theta, prob)) < 1e-12);
    }
  }
}

TEST_CASE("coincident points") {
  mds::Problem prob = random_problem(3, 2, 5);
  auto theta = random_matrix(2, 3, 6, -1, 1);
  theta(0, 2) = theta(0, 1);
  theta(1, 2) = theta(1, 1);
  CHECK_THROWS_WITH_AS(mds::update(theta, prob, kSerial), doctest::Contains("objects 1 and 2"),
                       NumericalError);
  prob.dissimilarities(1, 2) = prob.dissimilarities(2, 1) = 0.0;
  CHECK_NOTHROW(mds::update(theta, prob, kSerial));
}

TEST_CASE("descent on 100 random instances") {
  for (int t = 0; t < 100; ++t) {
    const std::size_t q = 3 + t % 10, p = 1 + t % 4;
    const auto prob = random_problem(q, p, 300 + t);
    auto theta = mds::random_configuration(p, q, 400 + t);
    for (int n = 0; n < 5; ++n) {
      const double before = mds::stress(theta, prob, kSerial);
      theta = mds::update(theta, prob, kSerial);
      CHECK(mds::stress(theta, prob, kSerial) <= before + 1e-12 * before);
    }
  }
}

TEST_CASE("surrogate is tangent and majorizing") {
  for (int t = 0; t < 1000; ++t) {
    const std::size_t q = 2 + t % 6, p = 1 + t % 3;
    const auto prob = random_problem(q, p, 500 + t);
    const auto anchor = random_matrix(p, q, 600 + t, -2, 2);
    const auto theta = random_matrix(p, q, 700 + t, -2, 2);
    const double fa = mds::stress(anchor, prob, kSerial);
    const double ga = mds::surrogate(anchor, anchor, prob);
    CHECK(std::abs(ga - fa) <= 1e-10 * (1 + fa));
    const double fx = mds::stress(theta, prob, kSerial);
    CHECK(mds::surrogate(theta, anchor, prob) - ga >= fx - fa - 1e-10 * (1 + fx));
  }
}

TEST_CASE("the update minimizes the surrogate") {
  for (int t = 0; t < 30; ++t) {
    const auto prob = random_problem(5, 2, 800 + t);
    const auto anchor = random_matrix(2, 5, 850 + t, -1, 1);
    const auto next = mds::update(anchor, prob, kSerial);
    const double best = mds::surrogate(next, anchor, prob);
    for (std::size_t k = 0; k < next.size(); ++k) {
      for (double d : {-1e-3, 1e-3}) {
        auto moved = next;
        moved.values()[k] += d;
        CHECK(mds::surrogate(moved, anchor, prob) >= best - 1e-12 * best);
      }
    }
  }
}

TEST_CASE("gradient matches central differences") {
  for (int t = 0; t < 20; ++t) {
    const auto prob = random_problem(6, 3, 900 + t);
    auto theta = random_matrix(3, 6, 950 + t, -1, 1);
    const auto g = mds::stress_gradient(theta, prob);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double num =
          central_difference([&] { return mds::stress(theta, prob, kSerial); }, theta.values()[k]);
      CHECK(gradient_close(g.values()[k], num, 1e-5));
    }
  }
}

TEST_CASE("anchoring places theta^1 at the origin and theta^2 on the last axis") {
  for (std::size_t p : {1u, 2u, 3u, 5u}) {
    for (int t = 0; t < 10; ++t) {
      const auto theta = random_matrix(p, 6, 1000 + 10 * p + t, -1, 1);
      const auto a = mds::anchor(theta);
      for (std::size_t k = 0; k < p; ++k) CHECK(a(k, 0) == 0.0);
      for (std::size_t k = 0; k + 1 < p; ++k) CHECK(a(k, 1) == 0.0);
      if (p >= 2) CHECK(a(p - 1, 1) > 0.0);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
          CHECK(std::abs(dist(a, i, j) - dist(theta, i, j)) < 1e-12);
    }
  }
  // Proper rotation: orientation of a 2-d triangle is kept.
  const auto tri = DenseMatrix::from_rows({{0.3, 1.0, 0.2}, {-0.4, 0.5, 0.9}});
  const auto a = mds::anchor(tri);
  auto cross = [](const DenseMatrix& m) {
    return (m(0, 1) - m(0, 0)) * (m(1, 2) - m(1, 0)) - (m(1, 1) - m(1, 0)) * (m(0, 2) - m(0, 0));
  };
  CHECK(cross(a) * cross(tri) > 0.0);
}

TEST_CASE("exactly embeddable points are recovered") {
  const auto pts = random_matrix(2, 8, 31, -1, 1);
  mds::Problem prob{mds::unit_weights(8), DenseMatrix(8, 8), 2};
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) prob.dissimilarities(i, j) = dist(pts, i, j);
  MmConfig c;
  c.seed = 3;
  c.epsilon = 1e-14;
  const auto r = mds::run(prob, c, kSerial, true);
  CHECK(r.trace.final_objective() < 1e-6);
  CHECK(r.state(0, 0) == 0.0);
  CHECK(r.state(0, 1) == 0.0);
}

TEST_CASE("anchoring leaves the trace untouched") {
  const auto prob = random_problem(10, 3, 41);
  MmConfig c;
  c.seed = 8;
  const auto plain = mds::run(prob, c, kSerial, false);
  const auto anchored = mds::run(prob, c, kSerial, true);
  CHECK(bitwise_equal(plain.trace.objective_values, anchored.trace.objective_values));
  CHECK(relative_error(mds::stress(anchored.state, prob, kSerial),
                       mds::stress(plain.state, prob, kSerial)) < 1e-10);
}

TEST_CASE("runs are monotone and backend independent") {
  const auto votes = mds::synthetic_votes(40, 120, 5);
  const mds::Problem prob{mds::unit_weights(40), mds::votes_to_dissimilarity(votes), 3};
  MmConfig c;
  c.seed = 2;
  c.max_iters = 200;
  const auto serial = mds::run(prob, c, kSerial, true);
  for (std::size_t n = 1; n < serial.trace.objective_values.size(); ++n)
    CHECK(serial.trace.objective_values[n] <= serial.trace.objective_values[n - 1]);
  for (std::size_t t : {2u, 4u, 8u}) {
    const auto par = mds::run(prob, c, Backend::parallel(t), true);
    CHECK(bitwise_equal(par.trace.objective_values, serial.trace.objective_values));
    CHECK(bitwise_equal(par.state, serial.state));
  }
}

TEST_CASE("votes to dissimilarity") {
  const auto votes = DenseMatrix::from_rows({{1, -1, 1, 1, 0},
                                             {1, -1, 1, 1, 1},
                                             {-1, 1, -1, -1, -1},
                                             {1, -1, 1, -1, 0}});
  const auto y = mds::votes_to_dissimilarity(votes);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(1, 2) == 1.0);
  CHECK(y(0, 3) == 0.25);
  CHECK(y(3, 0) == 0.25);
  for (std::size_t i = 0; i < 4; ++i) CHECK(y(i, i) == 0.0);

  CHECK_THROWS_WITH_AS(mds::votes_to_dissimilarity(DenseMatrix::from_rows({{1, 0}, {0, 1}, {1, 1}})),
                       doctest::Contains("0 and 1"), InputError);
  CHECK_THROWS_AS(mds::votes_to_dissimilarity(DenseMatrix::from_rows({{2, 1}, {1, 1}})), InputError);
}

TEST_CASE("problem validation") {
  auto prob = random_problem(4, 2, 3);
  CHECK_NOTHROW(prob.validate());
  auto bad = prob;
  bad.weights(0, 1) = 5.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = prob;
  bad.dissimilarities(2, 2) = 1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = prob;
  for (std::size_t j = 0; j < 4; ++j) bad.weights(3, j) = bad.weights(j, 3) = 0.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("object 3"), InputError);
  bad = prob;
  bad.dim = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
