#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.h"
#include "tokred/errors.h"
#include "tokred/kernels.h"

using namespace tokred;
using tokred::testing::max_rel_diff;
using tokred::testing::naive_matmul;
using tokred::testing::random_matrix;

TEST_CASE("matmul identity and scalar") {
  CHECK(matmul(Matrix{{1, 0}, {0, 1}}, Matrix{{3, 4}, {5, 6}}) == Matrix{{3, 4}, {5, 6}});
  CHECK(matmul(Matrix{{2}}, Matrix{{3}}) == Matrix{{6}});
}

TEST_CASE("matmul matches the triple-loop oracle") {
  std::mt19937_64 rng(11);
  const Matrix a = random_matrix(5, 7, rng);
  const Matrix b = random_matrix(7, 3, rng);
  const Matrix c = matmul(a, b);
  REQUIRE(c.rows() == 5);
  REQUIRE(c.cols() == 3);
  CHECK(max_rel_diff(c, naive_matmul(a, b)) < 1e-10);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), InvalidInput);
}

TEST_CASE("matmul is associative on random small matrices") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    const Matrix a = random_matrix(dim(rng), dim(rng), rng);
    const Matrix b = random_matrix(a.cols(), dim(rng), rng);
    const Matrix c = random_matrix(b.cols(), dim(rng), rng);
    CHECK(max_rel_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-8);
  }
}

TEST_CASE("row_softmax closed forms") {
  CHECK(row_softmax(Matrix{{0, 0}}) == Matrix{{0.5, 0.5}});
  CHECK(row_softmax(Matrix{{1000, 1000}}) == Matrix{{0.5, 0.5}});
  const Matrix s = row_softmax(Matrix{{0, std::log(3.0)}});
  CHECK(s(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("row_softmax rows are distributions even for large magnitudes") {
  std::mt19937_64 rng(13);
  for (double scale : {1.0, 50.0, 1e3, 1e6}) {
    const Matrix s = row_softmax(random_matrix(20, 9, rng, scale));
    REQUIRE(s.all_finite());
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("cosine similarity") {
  const std::vector<double> x{1.0, 2.0, -3.0};
  const std::vector<double> neg{-1.0, -2.0, 3.0};
  CHECK(cosine_sim(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_sim(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);

  SUBCASE("zero-norm vectors are dissimilar to everything") {
    const std::vector<double> zero(3, 0.0);
    CHECK(cosine_sim(zero, x) == 0.0);
    CHECK(cosine_sim(zero, zero) == 0.0);
  }

  SUBCASE("symmetric bit for bit") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 200; ++i) {
      const Matrix m = random_matrix(2, 16, rng);
      CHECK(cosine_sim(m.row(0), m.row(1)) == cosine_sim(m.row(1), m.row(0)));
    }
  }
}

TEST_CASE("gather and scatter rows") {
  const Matrix a{{1, 1}, {2, 2}, {3, 3}};
  const std::vector<std::size_t> idx{2, 0};
  CHECK(gather_rows(a, idx) == Matrix{{3, 3}, {1, 1}});
  CHECK(scatter_rows(Matrix{{3, 3}, {1, 1}}, idx, 3) == Matrix{{1, 1}, {0, 0}, {3, 3}});
  const std::vector<std::size_t> bad{5};
  CHECK_THROWS_AS(gather_rows(a, bad), InvalidInput);
}

TEST_CASE("matrix construction checks data length") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), InvalidInput);
}
