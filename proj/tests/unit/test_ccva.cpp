#include <cmath>
#include <random>

#include <doctest.h>

#include "lrcalib/ccva.hpp"

using namespace lrcalib;

namespace {

Vec random_vec(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vec v(d);
    for (double& x : v) x = g(rng);
    return v;
}

// Model whose forward is the identity on nonnegative inputs.
IfcModel identity_model(std::size_t d) {
    IfcModel m;
    m.in_dim = d;
    m.hidden_dim = d;
    m.w1.assign(d * d, 0.0);
    m.w2.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        m.w1[i * d + i] = 1.0;
        m.w2[i * d + i] = 1.0;
    }
    m.b1.assign(d, 0.0);
    m.b2.assign(d, 0.0);
    return m;
}

// Model that outputs a constant vector regardless of input.
IfcModel constant_model(const Vec& out) {
    IfcModel m;
    const std::size_t d = out.size();
    m.in_dim = d;
    m.hidden_dim = d;
    m.w1.assign(d * d, 0.0);
    m.w2.assign(d * d, 0.0);
    m.b1.assign(d, 0.0);
    m.b2 = out;
    return m;
}

const ClassId kNovel{10, Partition::novel};
const ClassId kBase0{0, Partition::base};
const ClassId kBase1{1, Partition::base};

}  // namespace

TEST_SUITE("ccva") {

TEST_CASE("identity-like model leaves the center unchanged") {
    MemoryBank bank(2, 64);
    bank.insert(kBase0, Vec{5.0, 0.5});
    bank.insert(kBase0, Vec{5.5, 0.0});
    const std::vector<Vec> shots = {{1.0, 2.0}, {2.0, 1.0}};
    for (const Vec& s : shots) bank.insert(kNovel, s);

    const CalibrationReport report =
        calibrate_center(bank, identity_model(2), kNovel, shots, 2);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(report.center_after[j] == doctest::Approx(report.center_before[j]).epsilon(1e-12));
    CHECK(report.dist_to_similar_after ==
          doctest::Approx(report.dist_to_similar_before).epsilon(1e-12));
}

TEST_CASE("one shot and one generated sample average to the two-point mean") {
    MemoryBank bank(2, 64);
    bank.insert(kBase0, Vec{4.0, 4.0});
    const Vec s{1.0, 3.0};
    const Vec g{3.0, -1.0};
    bank.insert(kNovel, s);

    const CalibrationReport report = calibrate_center(bank, constant_model(g), kNovel, {s}, 1);
    CHECK(report.center_before == s);
    CHECK(report.center_after[0] == doctest::Approx((s[0] + g[0]) / 2.0));
    CHECK(report.center_after[1] == doctest::Approx((s[1] + g[1]) / 2.0));
}

TEST_CASE("bank grows by shots * count entries") {
    MemoryBank bank(2, 256);
    bank.insert(kBase0, Vec{4.0, 4.0});
    std::mt19937_64 rng(3);
    std::vector<Vec> shots;
    for (int i = 0; i < 3; ++i) {
        shots.push_back(random_vec(rng, 2));
        shots.back()[0] += 2.0;
        bank.insert(kNovel, shots.back());
    }
    const std::size_t before = bank.class_size(kNovel.id);
    calibrate_center(bank, identity_model(2), kNovel, shots, 2);
    CHECK(bank.class_size(kNovel.id) == before + 3 * 2);
}

TEST_CASE("report distances recompute exactly from final bank state (50 seeds)") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        std::mt19937_64 rng(seed);
        MemoryBank bank(4, 512);
        // two base classes with distinct directions
        for (int i = 0; i < 20; ++i) {
            Vec a = random_vec(rng, 4);
            a[0] += 6.0;
            bank.insert(kBase0, a);
            Vec b = random_vec(rng, 4);
            b[1] += 6.0;
            bank.insert(kBase1, b);
        }
        std::vector<Vec> shots;
        for (int i = 0; i < 2; ++i) {
            Vec s = random_vec(rng, 4);
            s[0] += 3.0;
            s[2] += 1.0;
            shots.push_back(s);
            bank.insert(kNovel, s);
        }
        const IfcModel model = make_ifc(4, 4, seed * 17 + 1);
        const CalibrationReport report = calibrate_center(bank, model, kNovel, shots, 2);

        // independent recomputation from current bank contents
        const Prototype novel_proto = bank.prototype(kNovel);
        const Prototype sim_proto = bank.prototype(report.similar_base);
        CHECK(report.center_after == novel_proto.mean);
        CHECK(report.dist_to_similar_after ==
              normalized_euclidean(novel_proto.mean, sim_proto.mean));
        CHECK(report.dist_to_similar_before ==
              normalized_euclidean(report.center_before, sim_proto.mean));
        // the chosen base class is the nearest one to the calibrated center
        const double other = normalized_euclidean(
            novel_proto.mean,
            bank.prototype(report.similar_base.id == 0 ? kBase1 : kBase0).mean);
        CHECK(report.dist_to_similar_after <= other);
    }
}

TEST_CASE("calibrate_center preconditions") {
    MemoryBank bank(2, 16);
    bank.insert(kBase0, Vec{1.0, 1.0});
    CHECK_THROWS_AS(calibrate_center(bank, identity_model(2), kNovel, {}, 2), EmptyInputError);
    CHECK_THROWS_AS(
        calibrate_center(bank, identity_model(2), kBase0, {Vec{1.0, 1.0}}, 2), NumericError);
    // novel class with no stored shots: prototype before insertion fails
    CHECK_THROWS_AS(calibrate_center(bank, identity_model(2), kNovel, {Vec{1.0, 1.0}}, 2),
                    EmptyClassError);
}

TEST_CASE("variance_transfer selects nearest base classes") {
    BaseStats stats;
    stats[0] = ClassStats{Vec{10.0, 0.0}, Vec{1.0, 1.0}};
    stats[1] = ClassStats{Vec{0.0, 10.0}, Vec{3.0, 3.0}};
    stats[2] = ClassStats{Vec{-10.0, 0.0}, Vec{9.0, 9.0}};

    const Vec mu{8.0, 1.0};
    const GaussianSpec k1 = variance_transfer(kNovel, stats, mu, 1);
    CHECK(k1.sigma2 == Vec{1.0, 1.0});
    CHECK(k1.mu == mu);

    const GaussianSpec k2 = variance_transfer(kNovel, stats, mu, 2);
    CHECK(k2.sigma2[0] == doctest::Approx(2.0));
    CHECK(k2.sigma2[1] == doctest::Approx(2.0));

    CHECK_THROWS_AS(variance_transfer(kNovel, stats, mu, 4), InsufficientBaseClassesError);
}

TEST_CASE("variance_transfer nearest-k set matches exhaustive sort oracle") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 20; ++trial) {
        BaseStats stats;
        for (std::uint32_t c = 0; c < 10; ++c) {
            Vec mean = random_vec(rng, 4, 3.0);
            mean[0] += 1.0;
            Vec s2(4);
            for (double& x : s2) x = 0.5 + std::abs(random_vec(rng, 1)[0]);
            stats[c] = ClassStats{mean, s2};
        }
        Vec mu = random_vec(rng, 4, 2.0);
        mu[1] += 1.5;

        const GaussianSpec spec = variance_transfer(kNovel, stats, mu, 3);

        std::vector<std::pair<double, std::uint32_t>> order;
        for (const auto& [id, s] : stats)
            order.emplace_back(normalized_euclidean(mu, s.mean), id);
        std::sort(order.begin(), order.end());
        Vec expect(4, 0.0);
        for (int i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                expect[j] += stats[order[i].second].sigma2[j] / 3.0;
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(spec.sigma2[j] == doctest::Approx(expect[j]).epsilon(1e-12));

        // convex combination bounds
        for (std::size_t j = 0; j < 4; ++j) {
            double lo = 1e300, hi = -1e300;
            for (int i = 0; i < 3; ++i) {
                lo = std::min(lo, stats[order[i].second].sigma2[j]);
                hi = std::max(hi, stats[order[i].second].sigma2[j]);
            }
            CHECK(spec.sigma2[j] >= lo - 1e-12);
            CHECK(spec.sigma2[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("sample_augmented: degenerate variance and determinism") {
    GaussianSpec spec;
    spec.cls = kNovel;
    spec.mu = Vec{1.5, -2.0, 0.0};
    spec.sigma2 = Vec{0.0, 0.0, 0.0};
    const auto samples = sample_augmented(spec, 5, 99);
    for (const Vec& s : samples) CHECK(s == spec.mu);

    spec.sigma2 = Vec{1.0, 2.0, 0.5};
    const auto a = sample_augmented(spec, 100, 1234);
    const auto b = sample_augmented(spec, 100, 1234);
    CHECK(a == b);
    const auto c = sample_augmented(spec, 100, 1235);
    CHECK(a != c);
}

TEST_CASE("sample_augmented law-of-large-numbers statistics") {
    GaussianSpec spec;
    spec.cls = kNovel;
    spec.mu = Vec{0.0, 0.0, 0.0, 0.0};
    spec.sigma2 = Vec{1.0, 1.0, 1.0, 1.0};
    const std::size_t n = 10000;
    const auto samples = sample_augmented(spec, n, 7);
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (const Vec& s : samples) mean += s[j];
        mean /= static_cast<double>(n);
        CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));
        double var = 0.0;
        for (const Vec& s : samples) var += (s[j] - mean) * (s[j] - mean);
        var /= static_cast<double>(n);
        CHECK(var == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("sample_augmented passes a componentwise KS test at 0.01") {
    GaussianSpec spec;
    spec.cls = kNovel;
    spec.mu = Vec{2.0, -1.0, 0.5, 3.0};
    spec.sigma2 = Vec{1.0, 4.0, 0.25, 2.0};
    const std::size_t n = 10000;
    const auto samples = sample_augmented(spec, n, 11);
    const double crit = 1.6276 / std::sqrt(static_cast<double>(n));
    for (std::size_t j = 0; j < 4; ++j) {
        Vec zs(n);
        for (std::size_t i = 0; i < n; ++i)
            zs[i] = (samples[i][j] - spec.mu[j]) / std::sqrt(spec.sigma2[j]);
        std::sort(zs.begin(), zs.end());
        double dmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double cdf = 0.5 * std::erfc(-zs[i] / std::sqrt(2.0));
            const double lo = static_cast<double>(i) / static_cast<double>(n);
            const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
            dmax = std::max({dmax, std::abs(cdf - lo), std::abs(cdf - hi)});
        }
        CHECK(dmax <= crit);
    }
}

TEST_CASE("loss_aug basics and oracle") {
    const ClassId c2{2, Partition::novel};
    std::vector<Vec> favor = {{0.0, 0.0, 1000.0}};
    CHECK(loss_aug(favor, c2) == doctest::Approx(0.0).epsilon(1e-9));

    std::vector<Vec> uniform = {{0.0, 0.0, 0.0, 0.0}};
    CHECK(loss_aug(uniform, c2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    std::mt19937_64 rng(97);
    std::vector<Vec> logits;
    for (int i = 0; i < 5; ++i) logits.push_back(random_vec(rng, 4, 2.0));
    double expect = 0.0;
    for (const Vec& row : logits) {
        double m = row[0];
        for (double z : row) m = std::max(m, z);
        double lse = 0.0;
        for (double z : row) lse += std::exp(z - m);
        expect += m + std::log(lse) - row[2];
    }
    expect /= 5.0;
    CHECK(loss_aug(logits, c2) == doctest::Approx(expect).epsilon(1e-12));
}

}  // TEST_SUITE
