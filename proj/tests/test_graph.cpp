// Copyright 2026 The dsgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dsgd/errors.hpp"
#include "dsgd/graph.hpp"
#include "support/oracles.hpp"

using namespace dsgd;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("embedding matrix rejects empty and non-finite input") {
    CHECK_THROWS_AS(EmbeddingMatrix(Matrix(0, 3)), InvalidInput);
    CHECK_THROWS_AS(EmbeddingMatrix(Matrix(2, 0)), InvalidInput);
    Matrix z = Matrix::Ones(3, 2);
    z(2, 1) = std::nan("");
    try {
      EmbeddingMatrix e(z);
      FAIL("expected throw");
    } catch (const InvalidInput& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }

  TEST_CASE("similarity of hand examples") {
    const Matrix eye = similarity_matrix(EmbeddingMatrix(mat({{1, 0}, {0, 1}}))).data;
    CHECK(eye.isApprox(Matrix::Identity(2, 2)));

    const Matrix par = similarity_matrix(EmbeddingMatrix(mat({{3, 0}, {5, 0}}))).data;
    CHECK(par.isApprox(Matrix::Ones(2, 2)));

    const Matrix diag = similarity_matrix(EmbeddingMatrix(mat({{1, 0}, {1, 1}}))).data;
    CHECK(diag(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(diag(1, 0) == diag(0, 1));
    CHECK(diag(0, 0) == 1.0);
    CHECK(diag(1, 1) == 1.0);
  }

  TEST_CASE("similarity matches the loop oracle and is exactly symmetric") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 1 + trial % 9;
      const int d = 1 + trial % 5;
      const Matrix z = oracle::random_matrix(n, d, rng);
      const Matrix a = similarity_matrix(EmbeddingMatrix(z)).data;
      CHECK((a - oracle::cosine(z)).cwiseAbs().maxCoeff() < 1e-12);
      for (int i = 0; i < n; ++i) {
        CHECK(a(i, i) == 1.0);
        for (int j = 0; j < n; ++j) {
          CHECK(a(i, j) == a(j, i));
          CHECK(a(i, j) <= 1.0 + 1e-9);
          CHECK(a(i, j) >= -1.0 - 1e-9);
        }
      }
    }
  }

  TEST_CASE("zero rows are clamped rather than rejected") {
    const Matrix a = similarity_matrix(EmbeddingMatrix(mat({{0, 0}, {1, 0}}))).data;
    CHECK(a.allFinite());
    CHECK(a(0, 0) == 0.0);
    CHECK(a(0, 1) == 0.0);
    CHECK(a(1, 1) == 1.0);
  }

  TEST_CASE("transition of hand examples") {
    const TopologyGraph u = transition_matrix(SimilarityMatrix{Matrix::Ones(2, 2)}, 1.0);
    CHECK(u.transition().isApprox(Matrix::Constant(2, 2, 0.5)));

    const double e = std::exp(1.0);
    const TopologyGraph g = transition_matrix(SimilarityMatrix{Matrix::Identity(2, 2)}, 1.0);
    CHECK(g.transition()(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-14));
    CHECK(g.transition()(1, 0) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-14));
    CHECK(g.transition()(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(g.transition()(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));

    const TopologyGraph b = build_graph(EmbeddingMatrix(Matrix::Identity(2, 2)), 1.0);
    CHECK((b.transition() - g.transition()).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("transition rejects bad gamma") {
    const SimilarityMatrix a{Matrix::Identity(2, 2)};
    CHECK_THROWS_AS(transition_matrix(a, 0.0), InvalidParameter);
    CHECK_THROWS_AS(transition_matrix(a, -1.0), InvalidParameter);
    CHECK_THROWS_AS(transition_matrix(a, std::nan("")), InvalidParameter);
  }

  TEST_CASE("large gamma flattens every column") {
    std::mt19937_64 rng(3);
    const Matrix z = oracle::random_matrix(7, 3, rng);
    const Matrix p = build_graph(EmbeddingMatrix(z), 1e6).transition();
    CHECK((p.array() - 1.0 / 7.0).abs().maxCoeff() < 1e-4);
  }

  TEST_CASE("transition matches the unstabilized oracle") {
    std::mt19937_64 rng(11);
    for (double gamma : {0.9, 1.0, 2.0}) {
      const Matrix z = oracle::random_matrix(9, 4, rng);
      const Matrix p = build_graph(EmbeddingMatrix(z), gamma).transition();
      const Matrix ref = oracle::column_softmax(oracle::cosine(z), gamma);
      CHECK((p - ref).cwiseAbs().maxCoeff() < 1e-13);
    }
  }

  TEST_CASE("column stochasticity and positivity over random batches") {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<int> n_of(1, 64), d_of(1, 32);
    for (int trial = 0; trial < 60; ++trial) {
      const Matrix z = oracle::random_matrix(n_of(rng), d_of(rng), rng, 5.0);
      for (double gamma : {0.9, 1.0, 2.0}) {
        const Matrix p = build_graph(EmbeddingMatrix(z), gamma).transition();
        CHECK((p.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
        CHECK(p.minCoeff() > 0.0);
      }
    }
  }

  TEST_CASE("identical rows give identical columns") {
    Matrix z = mat({{1, 2}, {0.5, -1}, {1, 2}});
    const Matrix p = build_graph(EmbeddingMatrix(z)).transition();
    CHECK(p(0, 0) == doctest::Approx(p(2, 2)));
    CHECK(p(1, 0) == doctest::Approx(p(1, 2)));
    CHECK(p(0, 0) == doctest::Approx(p(2, 0)));
  }

  TEST_CASE("scale invariance") {
    std::mt19937_64 rng(5);
    const Matrix z = oracle::random_matrix(12, 6, rng);
    const Matrix p = build_graph(EmbeddingMatrix(z)).transition();
    for (double c : {1e-3, 0.1, 3.0, 100.0, 1e4}) {
      const Matrix q = build_graph(EmbeddingMatrix(c * z)).transition();
      CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("permutation equivariance") {
    std::mt19937_64 rng(23);
    const Matrix z = oracle::random_matrix(10, 3, rng);
    std::vector<int> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix zp(10, 3);
    for (int i = 0; i < 10; ++i) zp.row(i) = z.row(perm[i]);
    const Matrix p = build_graph(EmbeddingMatrix(z)).transition();
    const Matrix pp = build_graph(EmbeddingMatrix(zp)).transition();
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) CHECK(pp(i, j) == doctest::Approx(p(perm[i], perm[j])).epsilon(1e-12));
  }

  TEST_CASE("sharpening makes each column peak on its own vertex") {
    std::mt19937_64 rng(29);
    const Matrix z = oracle::random_matrix(8, 5, rng);
    const Matrix p = build_graph(EmbeddingMatrix(z), 1e-3).transition();
    for (int j = 0; j < 8; ++j) {
      Eigen::Index best = 0;
      p.col(j).maxCoeff(&best);
      CHECK(best == j);
    }
  }

  TEST_CASE("from_transition validates its input") {
    CHECK_NOTHROW(TopologyGraph::from_transition(Matrix::Identity(3, 3)));
    CHECK_THROWS_AS(TopologyGraph::from_transition(Matrix::Ones(2, 2)), InvalidInput);
    Matrix neg = mat({{1.5, 0.5}, {-0.5, 0.5}});
    CHECK_THROWS_AS(TopologyGraph::from_transition(neg), InvalidInput);
    CHECK_THROWS_AS(TopologyGraph::from_transition(Matrix::Identity(2, 3)), InvalidInput);
  }

  TEST_CASE("graph backward matches finite differences of a linear probe") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix z = oracle::random_matrix(5, 3, rng);
      const Matrix w = oracle::random_matrix(5, 5, rng);
      const double gamma = 0.5 + 0.25 * trial;
      const GraphTape tape = build_graph_taped(EmbeddingMatrix(z), gamma);
      const Matrix grad = graph_backward(tape, w);
      const auto f = [&](const Matrix& x) {
        return (oracle::column_softmax(oracle::cosine(x), gamma).array() * w.array()).sum();
      };
      CHECK(oracle::relative_error(grad, oracle::central_difference(f, z)) < 1e-7);
      CHECK((tape.transition - build_graph(EmbeddingMatrix(z), gamma).transition()).norm() == 0.0);
    }
  }
}
