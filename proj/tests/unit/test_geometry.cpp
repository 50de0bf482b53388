#include <cmath>
#include <random>

#include <doctest.h>

#include "lrcalib/geometry.hpp"

using namespace lrcalib;

namespace {

Vec random_vec(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vec v(d);
    for (double& x : v) x = g(rng);
    return v;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("normalize basic cases") {
    const UnitVec u = normalize(Vec{3.0, 4.0});
    CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));

    const UnitVec id = normalize(Vec{1.0, 0.0});
    CHECK(id[0] == 1.0);
    CHECK(id[1] == 0.0);

    CHECK_THROWS_AS(normalize(Vec{0.0, 0.0}), ZeroVectorError);
}

TEST_CASE("normalize is idempotent") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const Vec v = random_vec(rng, 8, 3.0);
        if (norm(v) <= kNormEps) continue;
        const UnitVec once = normalize(v);
        const UnitVec twice = normalize(once.values);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(std::abs(once[i] - twice[i]) < 1e-9);
        CHECK(std::abs(norm(once.values) - 1.0) < 1e-9);
    }
}

TEST_CASE("cosine_sim basic cases") {
    CHECK(cosine_sim(Vec{1.0, 2.0}, Vec{1.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_sim(Vec{1.0, 0.0}, Vec{0.0, 1.0}) == doctest::Approx(0.0));
    CHECK(cosine_sim(Vec{1.0, 0.0}, Vec{-1.0, 0.0}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_sim(Vec{0.0, 0.0}, Vec{1.0, 0.0}), ZeroVectorError);
}

TEST_CASE("cosine_sim equals dot of normalized inputs") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const Vec a = random_vec(rng, 6);
        const Vec b = random_vec(rng, 6);
        if (norm(a) <= kNormEps || norm(b) <= kNormEps) continue;
        const double via_unit = dot(normalize(a).values, normalize(b).values);
        CHECK(cosine_sim(a, b) == doctest::Approx(via_unit).epsilon(1e-9));
        CHECK(cosine_sim(a, b) == doctest::Approx(cosine_sim(b, a)).epsilon(1e-12));
        CHECK(cosine_sim(a, b) <= 1.0);
        CHECK(cosine_sim(a, b) >= -1.0);
    }
}

TEST_CASE("difference_vector") {
    const UnitVec x = normalize(Vec{1.0, 0.0});
    const UnitVec p = normalize(Vec{0.0, 1.0});
    const Vec zero = difference_vector(x, x);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);

    const Vec d = difference_vector(x, p);
    CHECK(d[0] == 1.0);
    CHECK(d[1] == -1.0);

    UnitVec bad;
    bad.values = Vec{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(difference_vector(x, bad), DimensionMismatchError);

    // componentwise subtraction oracle on random pairs
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const UnitVec a = normalize(random_vec(rng, 5));
        const UnitVec b = normalize(random_vec(rng, 5));
        const Vec got = difference_vector(a, b);
        for (std::size_t i = 0; i < 5; ++i) CHECK(got[i] == a[i] - b[i]);
    }
}

TEST_CASE("softmax basic cases") {
    const Vec uniform = softmax(Vec{0.0, 0.0, 0.0});
    for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const Vec stable = softmax(Vec{1000.0, 0.0});
    CHECK(std::isfinite(stable[0]));
    CHECK(stable[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(stable[1] == doctest::Approx(0.0).epsilon(1e-9));

    // closed-form oracle: softmax(ln 1, ln 2, ln 3) = (1/6, 2/6, 3/6)
    const Vec probs = softmax(Vec{std::log(1.0), std::log(2.0), std::log(3.0)});
    CHECK(probs[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(probs[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(Vec{}), EmptyInputError);
}

TEST_CASE("softmax properties") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const Vec scores = random_vec(rng, 7, 4.0);
        const Vec p = softmax(scores);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x > 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

        Vec shifted = scores;
        for (double& x : shifted) x += 17.25;
        const Vec q = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK(std::abs(p[i] - q[i]) < 1e-9);
    }
}

TEST_CASE("normalized_euclidean") {
    CHECK(normalized_euclidean(Vec{2.0, 1.0}, Vec{2.0, 1.0}) == doctest::Approx(0.0));
    CHECK(normalized_euclidean(Vec{1.0, 0.0}, Vec{-1.0, 0.0}) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(normalized_euclidean(Vec{1.0, 0.0}, Vec{0.0, 1.0}) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(normalized_euclidean(Vec{0.0, 0.0}, Vec{1.0, 0.0}), ZeroVectorError);
    CHECK_THROWS_AS(normalized_euclidean(Vec{1.0, 0.0}, Vec{1.0, 0.0, 0.0}),
                    DimensionMismatchError);
}

TEST_CASE("normalized_euclidean squared equals 2 - 2 cos") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
        const Vec a = random_vec(rng, 9, 2.0);
        const Vec b = random_vec(rng, 9, 2.0);
        if (norm(a) <= kNormEps || norm(b) <= kNormEps) continue;
        const double d = normalized_euclidean(a, b);
        CHECK(d * d == doctest::Approx(2.0 - 2.0 * cosine_sim(a, b)).epsilon(1e-7));
    }
}

}  // TEST_SUITE
