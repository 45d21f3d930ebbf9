#include <doctest.h>

#include <cmath>

#include "mctf/matrix.hpp"
#include "mctf/rng.hpp"

using namespace mctf;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, float lo, float hi) {
    Matrix m(rows, cols);
    for (float& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("matmul hand cases") {
    const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});

    Matrix eye(2, 2);
    eye.at(0, 0) = eye.at(1, 1) = 1.0f;
    CHECK(matmul(eye, m) == m);

    const Matrix ones = Matrix::from_rows({{1}, {1}});
    const Matrix prod = matmul(m, ones);
    CHECK(prod.at(0, 0) == doctest::Approx(3.0f));
    CHECK(prod.at(1, 0) == doctest::Approx(7.0f));

    const Matrix zero(2, 2);
    CHECK(matmul(zero, m) == zero);

    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = random_matrix(rng, 4, 4, -1.0f, 1.0f);
        const Matrix b = random_matrix(rng, 4, 4, -1.0f, 1.0f);
        const Matrix c = random_matrix(rng, 4, 4, -1.0f, 1.0f);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i) {
            const float x = left.data()[i];
            const float y = right.data()[i];
            CHECK(std::fabs(x - y) <= 1e-4f * std::max(1.0f, std::fabs(x)));
        }
    }
}

TEST_CASE("row_softmax hand cases") {
    const Matrix sym = row_softmax(Matrix::from_rows({{0, 0}}));
    CHECK(sym.at(0, 0) == doctest::Approx(0.5f));
    CHECK(sym.at(0, 1) == doctest::Approx(0.5f));

    const float bias[2] = {std::log(1.0f), std::log(3.0f)};
    const Matrix biased = row_softmax(Matrix::from_rows({{0, 0}}), std::span<const float>(bias, 2));
    CHECK(biased.at(0, 0) == doctest::Approx(0.25f).epsilon(1e-5));
    CHECK(biased.at(0, 1) == doctest::Approx(0.75f).epsilon(1e-5));

    const Matrix big = row_softmax(Matrix::from_rows({{1000, 0}}));
    CHECK(big.all_finite());
    CHECK(big.at(0, 0) == doctest::Approx(1.0f));
    CHECK(big.at(0, 1) == doctest::Approx(0.0f));
}

TEST_CASE("row_softmax rows sum to one") {
    Rng rng(12);
    const Matrix m = random_matrix(rng, 20, 17, -50.0f, 50.0f);
    const Matrix s = row_softmax(m);
    for (int i = 0; i < s.rows(); ++i) {
        float sum = 0.0f;
        for (int j = 0; j < s.cols(); ++j) {
            sum += s.at(i, j);
            CHECK(s.at(i, j) >= 0.0f);
        }
        CHECK(std::fabs(sum - 1.0f) <= 1e-6f);
    }
}

TEST_CASE("layer_norm hand cases") {
    const std::vector<float> gain{1.0f, 1.0f};
    const std::vector<float> shift{0.0f, 0.0f};

    const Matrix constant = layer_norm(Matrix::from_rows({{3, 3}}), gain, shift);
    CHECK(constant.at(0, 0) == doctest::Approx(0.0f));
    CHECK(constant.at(0, 1) == doctest::Approx(0.0f));

    const Matrix normed = layer_norm(Matrix::from_rows({{1, -1}}), gain, shift);
    CHECK(normed.at(0, 0) == doctest::Approx(1.0f).epsilon(1e-4));
    CHECK(normed.at(0, 1) == doctest::Approx(-1.0f).epsilon(1e-4));

    const std::vector<float> zero_gain{0.0f, 0.0f};
    const std::vector<float> c_shift{2.5f, 2.5f};
    const Matrix shifted = layer_norm(Matrix::from_rows({{7, -4}}), zero_gain, c_shift);
    CHECK(shifted.at(0, 0) == doctest::Approx(2.5f));
    CHECK(shifted.at(0, 1) == doctest::Approx(2.5f));
}

TEST_CASE("layer_norm normalizes random rows") {
    Rng rng(13);
    const int cols = 24;
    const std::vector<float> gain(cols, 1.0f);
    const std::vector<float> shift(cols, 0.0f);
    const Matrix m = random_matrix(rng, 10, cols, -3.0f, 3.0f);
    const Matrix out = layer_norm(m, gain, shift);
    for (int i = 0; i < out.rows(); ++i) {
        double mean = 0.0, var = 0.0;
        for (int j = 0; j < cols; ++j) mean += out.at(i, j);
        mean /= cols;
        for (int j = 0; j < cols; ++j) var += (out.at(i, j) - mean) * (out.at(i, j) - mean);
        var /= cols;
        CHECK(std::fabs(mean) <= 1e-5);
        CHECK(std::fabs(var - 1.0) <= 1e-3);
    }
}

TEST_CASE("gelu") {
    const Matrix z = gelu(Matrix::from_rows({{0}}));
    CHECK(z.at(0, 0) == 0.0f);

    const Matrix big = gelu(Matrix::from_rows({{10}}));
    CHECK(big.at(0, 0) == doctest::Approx(10.0f).epsilon(1e-4));

    const Matrix one = gelu(Matrix::from_rows({{1}}));
    CHECK(one.at(0, 0) == doctest::Approx(0.8412f).epsilon(1e-3));
}

TEST_CASE("l2_normalize_rows") {
    const Matrix m = Matrix::from_rows({{3, 4}, {0, 0}});
    const Matrix out = l2_normalize_rows(m);
    CHECK(out.at(0, 0) == doctest::Approx(0.6f));
    CHECK(out.at(0, 1) == doctest::Approx(0.8f));
    CHECK(out.at(1, 0) == 0.0f);  // zero rows stay zero
    CHECK(out.at(1, 1) == 0.0f);
}
