#include "ceb/posterior.hpp"

#include "gen.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace ceb;

namespace {

StudyCollection pair(double ye, double ve, double yo, double vo) {
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, ye, ve);
    c.observational.push_back(make_study("o", StudyKind::observational, yo, vo));
    return c;
}

// Independent check: trapezoid rule over theta of the product of the
// experimental density and each observational density with its bias
// integrated out, on a wide fixed window around y_e.
GaussianPosterior trapezoid_posterior(const StudyCollection& c, const BiasPrior& prior) {
    const auto& e = c.exp();
    double lo = e.estimate - 12.0 * std::sqrt(e.variance);
    double hi = e.estimate + 12.0 * std::sqrt(e.variance);
    for (const auto& o : c.observational) {
        const double centre = o.estimate - prior.mu;
        const double sd = std::sqrt(o.variance + prior.gamma2);
        lo = std::min(lo, centre - 12.0 * sd);
        hi = std::max(hi, centre + 12.0 * sd);
    }
    const int n = 400001;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> logp(n);
    double peak = -HUGE_VAL;
    for (int i = 0; i < n; ++i) {
        const double t = lo + i * h;
        double l = -0.5 * (e.estimate - t) * (e.estimate - t) / e.variance;
        for (const auto& o : c.observational) {
            const double s2 = o.variance + prior.gamma2;
            l -= 0.5 * (o.estimate - prior.mu - t) * (o.estimate - prior.mu - t) / s2;
        }
        logp[i] = l;
        peak = std::max(peak, l);
    }
    double m0 = 0, m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
        const double t = lo + i * h;
        const double w = std::exp(logp[i] - peak) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
        m0 += w;
        m1 += w * t;
        m2 += w * t * t;
    }
    const double mean = m1 / m0;
    return {mean, m2 / m0 - mean * mean};
}

}  // namespace

TEST_CASE("flat prior is the experiment") {
    CHECK(posterior_flat(make_study("e", StudyKind::experimental, 3.5, 2.0)) == GaussianPosterior{3.5, 2.0});
    CHECK(posterior_flat(make_study("e", StudyKind::experimental, 0.0, 1.0)) == GaussianPosterior{0.0, 1.0});
    const auto reduced = posterior_flat(make_study("e", StudyKind::experimental, -1.40, 3.16));
    CHECK(reduced == GaussianPosterior{-1.40, 3.16});
    // 1.96 * sqrt(3.16) = 3.484...
    CHECK(reduced.lower95() == doctest::Approx(-4.884).epsilon(1e-3));
    CHECK(reduced.upper95() == doctest::Approx(2.084).epsilon(1e-3));
}

TEST_CASE("known-prior worked examples") {
    const auto a = posterior_given_prior(pair(0, 1, 2, 1), {0, 1});
    CHECK(a.mean == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(a.variance == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    const auto b = posterior_given_prior(pair(1, 1, 5, 1), {4, 0});
    CHECK(b.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b.variance == doctest::Approx(0.5).epsilon(1e-15));

    StudyCollection none;
    none.experimental = make_study("e", StudyKind::experimental, 0.7, 0.4);
    CHECK(posterior_given_prior(none, {3, 2}) == posterior_flat(*none.experimental));
}

TEST_CASE("calibrated posterior uses the same arithmetic") {
    CHECK(posterior_ceb(pair(0, 1, 2, 1), {0, 1}) == posterior_given_prior(pair(0, 1, 2, 1), {0, 1}));
    // Residuals vanish when every y_o = y_e + mu.
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, 1.25, 1.0);
    for (int j = 0; j < 4; ++j) c.observational.push_back(make_study("o", StudyKind::observational, 1.25 + 0.5, 0.3 + j));
    CHECK(posterior_ceb(c, {0.5, 0.7}).mean == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("zero-mean correction form equals the known-prior form") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const auto c = testgen::random_collection(rng, testgen::uniform_int(rng, 0, 8), 0);
        const double g = testgen::uniform(rng, 0, 3);
        const auto a = posterior_zero_mean(c, g);
        const auto b = posterior_given_prior(c, {0, g});
        CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
        CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-14));
    }
}

TEST_CASE("quadrature oracle on the worked example") {
    const auto q = posterior_quadrature_oracle(pair(0, 1, 2, 1), {0, 1});
    CHECK(std::abs(q.mean - 2.0 / 3.0) < 1e-6);
    CHECK(std::abs(q.variance - 2.0 / 3.0) < 1e-6);

    StudyCollection none;
    none.experimental = make_study("e", StudyKind::experimental, -0.3, 2.5);
    const auto f = posterior_quadrature_oracle(none, {1, 1});
    CHECK(std::abs(f.mean - -0.3) < 1e-8);
    CHECK(std::abs(f.variance - 2.5) < 1e-8);
}

TEST_CASE("quadrature oracle argument checks") {
    CHECK_THROWS_AS(posterior_quadrature_oracle(pair(0, 1, 2, 1), {0, 1}, 10.0, 1000), Error);
    try {
        posterior_quadrature_oracle(pair(0, 1, 2, 1), {0, 1}, 2.0, 10001);
        FAIL("expected grid_too_narrow");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::grid_too_narrow);
    }
}

TEST_CASE("closed form matches both quadratures on random collections") {
    Rng rng(31337);
    for (int i = 0; i < 100; ++i) {
        const auto c = testgen::random_collection(rng, 5, 0);
        const auto prior = testgen::random_prior(rng);
        const auto exact = posterior_given_prior(c, prior);
        const auto q = posterior_quadrature_oracle(c, prior);
        CHECK(std::abs(exact.mean - q.mean) <= 1e-6);
        CHECK(std::abs(exact.variance - q.variance) <= 1e-6);
        const auto t = trapezoid_posterior(c, prior);
        CHECK(std::abs(exact.mean - t.mean) <= 1e-6);
        CHECK(std::abs(exact.variance - t.variance) <= 1e-6);
    }
}

TEST_CASE("variance shrinks as studies are added and never exceeds the experiment") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        auto c = testgen::random_collection(rng, 0, 0);
        const auto prior = testgen::random_prior(rng);
        double last = posterior_given_prior(c, prior).variance;
        CHECK(last == c.exp().variance);
        for (int j = 0; j < 6; ++j) {
            c.observational.push_back(make_study("o", StudyKind::observational, testgen::uniform(rng, -3, 3),
                                                 testgen::uniform(rng, 0.1, 4)));
            const double v = posterior_given_prior(c, prior).variance;
            CHECK(v < last);
            CHECK(v <= c.exp().variance);
            last = v;
        }
    }
}

TEST_CASE("shifting y_e and every y_o shifts the mean") {
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        auto c = testgen::random_collection(rng, testgen::uniform_int(rng, 0, 7), 0);
        const auto prior = testgen::random_prior(rng);
        const double shift = testgen::uniform(rng, -5, 5);
        const auto before = posterior_given_prior(c, prior);
        c.experimental->estimate += shift;
        for (auto& o : c.observational) o.estimate += shift;
        const auto after = posterior_given_prior(c, prior);
        CHECK(after.mean == doctest::Approx(before.mean + shift).epsilon(1e-12).scale(1));
        CHECK(after.variance == before.variance);
    }
}

TEST_CASE("invalid priors") {
    CHECK_THROWS_AS(posterior_given_prior(pair(0, 1, 2, 1), {0, -1}), Error);
    CHECK_THROWS_AS(posterior_given_prior(pair(0, 1, 2, 1), {std::nan(""), 1}), Error);
}
