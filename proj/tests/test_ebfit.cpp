#include "ceb/ebfit.hpp"

#include "ceb/posterior.hpp"
#include "gen.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

using namespace ceb;

namespace {

std::vector<StudySummary> cal(std::initializer_list<double> y, std::initializer_list<double> v) {
    std::vector<StudySummary> out;
    auto vi = v.begin();
    int k = 0;
    for (const double yk : y) out.push_back(make_study("c" + std::to_string(++k), StudyKind::calibration, yk, *vi++));
    return out;
}

std::vector<StudySummary> random_calibration(Rng& rng, int K, double mu, double g2, bool homoskedastic) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double common = testgen::uniform(rng, 0.3, 2.0);
    std::vector<StudySummary> out;
    for (int k = 0; k < K; ++k) {
        const double v = homoskedastic ? common : testgen::uniform(rng, 0.1, 3.0);
        out.push_back(make_study("c", StudyKind::calibration, mu + std::sqrt(g2) * z(rng) + std::sqrt(v) * z(rng), v));
    }
    return out;
}

// log of the integral over theta of N(y_e; theta, s_e^2) prod_j N(y_j; theta + mu, s_j^2 + g),
// by the trapezoid rule (spectrally accurate for Gaussian integrands).
double log_density_product(double mu, double g, const StudyCollection& c) {
    const auto& e = c.exp();
    const auto post = posterior_given_prior(c, {mu, g});
    const double sd = post.sd();
    const int n = 20001;
    const double lo = post.mean - 30 * sd;
    const double h = 60 * sd / (n - 1);
    auto logf = [&](double t) {
        double l = -0.5 * std::log(2 * std::numbers::pi * e.variance) - 0.5 * (e.estimate - t) * (e.estimate - t) / e.variance;
        for (const auto& o : c.observational) {
            const double s2 = o.variance + g;
            l += -0.5 * std::log(2 * std::numbers::pi * s2) - 0.5 * (o.estimate - t - mu) * (o.estimate - t - mu) / s2;
        }
        return l;
    };
    const double peak = logf(post.mean);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += std::exp(logf(lo + i * h) - peak) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    return peak + std::log(total * h);
}

double homoskedastic_mle_gamma2(const std::vector<StudySummary>& s) {
    double mean = 0.0;
    for (const auto& x : s) mean += x.estimate;
    mean /= static_cast<double>(s.size());
    double ss = 0.0;
    for (const auto& x : s) ss += (x.estimate - mean) * (x.estimate - mean);
    return std::max(0.0, ss / static_cast<double>(s.size()) - s.front().variance);
}

double grid_max(const std::function<double(double)>& f, double bound, int n) {
    double best = -HUGE_VAL;
    for (int i = 0; i < n; ++i) best = std::max(best, f(bound * i / (n - 1)));
    return best;
}

}  // namespace

TEST_CASE("calibration log density examples") {
    CHECK(calibration_loglik(0, 0, cal({0}, {1})) == 0.0);
    const auto two = cal({1.5, 1.5}, {0.7, 0.7});
    for (const double d : {-2.0, -0.1, 1e-3, 0.5}) {
        CHECK(calibration_loglik(1.5, 0.4, two) > calibration_loglik(1.5 + d, 0.4, two));
    }
}

TEST_CASE("marginal likelihood matches the integrated density product") {
    Rng rng(101);
    for (int i = 0; i < 40; ++i) {
        const auto c = testgen::random_collection(rng, 4, 0);
        const auto prior = testgen::random_prior(rng);
        // The dropped constant is J/2 log(2 pi) + 1/2 log s_e^2.
        const double constant = -0.5 * 4 * std::log(2 * std::numbers::pi) - 0.5 * std::log(c.exp().variance);
        const double direct = log_density_product(prior.mu, prior.gamma2, c);
        CHECK(marginal_loglik(prior.mu, prior.gamma2, c) + constant == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("profiled mu") {
    CHECK(profiled_mu(0, cal({1, 3}, {1, 1})) == 2.0);
    CHECK(profiled_mu(1, cal({0, 4}, {1, 3})) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(profiled_mu(0.3, cal({-2.5}, {2})) == -2.5);
    CHECK(profiled_mu(77, cal({-2.5}, {2})) == -2.5);
    try {
        profiled_mu(1, {});
        FAIL("expected empty_calibration_set");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_calibration_set);
    }
}

TEST_CASE("MLE matches the homoskedastic closed form") {
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_calibration(rng, testgen::uniform_int(rng, 2, 40), testgen::uniform(rng, -1, 1),
                                          testgen::uniform(rng, 0, 2), true);
        const auto r = fit_mle_calibration(s);
        const double expect = homoskedastic_mle_gamma2(s);
        CHECK(std::abs(r.prior.gamma2 - expect) < 1e-8);
        double ybar = 0;
        for (const auto& x : s) ybar += x.estimate;
        ybar /= static_cast<double>(s.size());
        CHECK(r.prior.mu == doctest::Approx(ybar).epsilon(1e-12));
        CHECK(r.bound_hit == (r.prior.gamma2 == 0.0));
    }
}

TEST_CASE("MLE boundary example") {
    const auto r = fit_mle_calibration(cal({2, 2}, {1, 1}));
    CHECK(r.prior.gamma2 == 0.0);
    CHECK(r.bound_hit);
    CHECK(r.prior.mu == 2.0);
    CHECK(r.method == FitMethod::mle);
    CHECK(r.bound == 1e3);
}

TEST_CASE("MLE beats a 1e5-point grid on heteroskedastic data") {
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        const auto s = random_calibration(rng, testgen::uniform_int(rng, 2, 15), 0.5, testgen::uniform(rng, 0, 3), false);
        const auto r = fit_mle_calibration(s);
        const double best = grid_max([&](double g) { return calibration_loglik(profiled_mu(g, s), g, s); }, r.bound, 100000);
        CHECK(r.objective_value >= best - 1e-9);
    }
}

TEST_CASE("MLE errors") {
    try {
        fit_mle_calibration({});
        FAIL("expected empty set error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_calibration_set);
    }
    try {
        fit_mle_calibration(cal({1}, {1}));
        FAIL("expected too few");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::too_few_calibration_studies);
    }
}

TEST_CASE("MLE and MM consistency at K = 1e4") {
    Rng rng(2718);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<StudySummary> s;
    for (int k = 0; k < 10000; ++k) s.push_back(make_study("c", StudyKind::calibration, 0.5 + z(rng) + z(rng), 1.0));
    for (const auto& r : {fit_mle_calibration(s), fit_mm_calibration(s)}) {
        CHECK(std::abs(r.prior.mu - 0.5) < 0.05);
        CHECK(std::abs(r.prior.gamma2 - 1.0) < 0.1);
    }
}

TEST_CASE("zero-mean MLE") {
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, 1.0, 1.0);
    for (int j = 0; j < 6; ++j) c.observational.push_back(make_study("o", StudyKind::observational, 1.0 + 1e-6 * j, 1.0));
    const auto r = fit_mle_zero_mean(c);
    CHECK(r.prior.gamma2 == 0.0);
    CHECK(r.bound_hit);
    CHECK(r.prior.mu == 0.0);

    StudyCollection one;
    one.experimental = c.experimental;
    one.observational.push_back(c.observational[0]);
    try {
        fit_mle_zero_mean(one);
        FAIL("expected too few observational studies");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::too_few_observational_studies);
    }
}

TEST_CASE("zero-mean MLE against a 1e6-point grid") {
    Rng rng(555);
    const auto c = testgen::random_collection(rng, 5, 0);
    const auto r = fit_mle_zero_mean(c);
    const double best = grid_max([&](double g) { return marginal_loglik(0.0, g, c); }, r.bound, 1000000);
    CHECK(r.objective_value >= best - 1e-9);
    CHECK(r.objective_value - best < 1e-6);
}

TEST_CASE("zero-mean MLE consistency at J = 1e4") {
    Rng rng(77);
    std::normal_distribution<double> z(0.0, 1.0);
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, 1.0 + z(rng), 1.0);
    for (int j = 0; j < 10000; ++j) c.observational.push_back(make_study("o", StudyKind::observational, 1.0 + z(rng) + z(rng), 1.0));
    CHECK(std::abs(fit_mle_zero_mean(c).prior.gamma2 - 1.0) < 0.1);
}

TEST_CASE("illusion fit leaves the experiment in place") {
    Rng rng(1);
    for (int i = 0; i < 300; ++i) {
        const auto c = testgen::random_collection(rng, testgen::uniform_int(rng, 1, 12), 0);
        const auto f = fit_mle_illusion(c);
        CHECK(f.posterior.mean == c.exp().estimate);
        CHECK(f.posterior.variance < c.exp().variance);
        // The reported fit reproduces the same mean through the closed form.
        const auto again = posterior_given_prior(c, f.report.prior);
        CHECK(again.mean == doctest::Approx(c.exp().estimate).epsilon(1e-9).scale(1));
        CHECK(again.variance == doctest::Approx(f.posterior.variance).epsilon(1e-12));
    }
}

TEST_CASE("illusion fit J = 1 variance") {
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, 0.0, 1.0);
    c.observational.push_back(make_study("o", StudyKind::observational, 10.0, 1.0));
    const auto f = fit_mle_illusion(c);
    const double g = f.report.prior.gamma2;
    CHECK(f.posterior.variance == doctest::Approx(1.0 / (1.0 + 1.0 / (1.0 + g))).epsilon(1e-14));
    // Grid scan of the profiled objective agrees with the optimizer.
    const double best = grid_max(
        [&](double x) { return marginal_loglik(profiled_mu(x, c.observational) - 0.0, x, c); }, f.report.bound, 100000);
    CHECK(f.report.objective_value >= best - 1e-9);
}

TEST_CASE("moment matching examples") {
    CHECK(mm_gamma2_raw(cal({1, 3}, {1, 1})) == 0.0);
    auto r = fit_mm_calibration(cal({1, 3}, {1, 1}));
    CHECK(r.prior == BiasPrior{2.0, 0.0});
    CHECK(mm_gamma2_raw(cal({2, 2}, {1, 1})) == -1.0);
    r = fit_mm_calibration(cal({2, 2}, {1, 1}));
    CHECK(r.prior == BiasPrior{2.0, 0.0});
    CHECK(r.bound_hit);
    CHECK_THROWS_AS(fit_mm_calibration(cal({2}, {1})), Error);

    CHECK(mm_zero_mean_gamma2_raw(cal({1, -1}, {1, 1})) == 0.0);
    CHECK(fit_mm_zero_mean(cal({2, -2}, {1, 1})).prior == BiasPrior{0.0, 3.0});
    CHECK(fit_mm_zero_mean(cal({0, 0, 0}, {1, 1, 1})).prior.gamma2 == 0.0);
    try {
        fit_mm_zero_mean(cal({1}, {1}));
        FAIL("expected too few");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::too_few_observational_studies);
    }
}

TEST_CASE("raw moment estimator bias matches the exact expectation") {
    // E[raw] = g - (1/K^2) sum_k (g + v_k); K = 50, 4000 replicates.
    const int K = 50;
    const double g = 1.0;
    Rng rng(424242);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(K);
    for (int k = 0; k < K; ++k) v[k] = 0.5 + k % 5 * 0.25;
    double expected = g;
    for (const double vk : v) expected -= (g + vk) / (K * K);
    std::vector<double> raws;
    std::vector<StudySummary> s(K);
    for (int r = 0; r < 4000; ++r) {
        for (int k = 0; k < K; ++k) s[k] = make_study("c", StudyKind::calibration, 0.5 + std::sqrt(g + v[k]) * z(rng), v[k]);
        raws.push_back(mm_gamma2_raw(s));
    }
    const double mean = std::accumulate(raws.begin(), raws.end(), 0.0) / raws.size();
    double ss = 0;
    for (const double x : raws) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / (raws.size() - 1) / raws.size());
    CHECK(std::abs(mean - expected) < 3 * se);
}

TEST_CASE("scale equivariance of the fitters") {
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const auto s = random_calibration(rng, 12, 0.4, 1.2, false);
        const double c = testgen::uniform(rng, 0.2, 5.0);
        auto scaled = s;
        for (auto& x : scaled) {
            x.estimate *= c;
            x.variance *= c * c;
        }
        const auto a = fit_mle_calibration(s);
        const auto b = fit_mle_calibration(scaled);
        CHECK(b.prior.mu == doctest::Approx(c * a.prior.mu).epsilon(1e-7).scale(1));
        CHECK(b.prior.gamma2 == doctest::Approx(c * c * a.prior.gamma2).epsilon(1e-7).scale(1));
        const auto m = fit_mm_calibration(s);
        const auto n = fit_mm_calibration(scaled);
        CHECK(n.prior.mu == doctest::Approx(c * m.prior.mu).epsilon(1e-12).scale(1));
        CHECK(n.prior.gamma2 == doctest::Approx(c * c * m.prior.gamma2).epsilon(1e-12).scale(1));
    }
}

TEST_CASE("SURE homoskedastic closed forms") {
    Rng rng(8080);
    for (int i = 0; i < 50; ++i) {
        const auto s = random_calibration(rng, testgen::uniform_int(rng, 3, 30), 0.3, testgen::uniform(rng, 0, 2), true);
        double ybar = 0;
        for (const auto& x : s) ybar += x.estimate;
        ybar /= static_cast<double>(s.size());
        const double v = s.front().variance;
        const double S = homoskedastic_mle_gamma2(s) > 0 ? homoskedastic_mle_gamma2(s) + v : 0.0;
        const auto r = fit_sure(s);
        CHECK(r.prior.mu == doctest::Approx(ybar).epsilon(1e-12));
        if (S > v) {
            CHECK(std::abs(r.prior.gamma2 - (S - v)) < 1e-8);
        } else {
            CHECK(r.prior.gamma2 == 0.0);
        }
        const auto q = fit_sure(s, std::nullopt, SureForm::squared_denominator);
        CHECK((q.prior.gamma2 == 0.0 || q.prior.gamma2 == q.bound));
    }
}

TEST_CASE("SURE profiled optimum is at most a 2-D grid minimum") {
    Rng rng(9);
    for (const auto form : {SureForm::stein, SureForm::squared_denominator}) {
        for (int i = 0; i < 10; ++i) {
            const auto s = random_calibration(rng, 8, 0.5, 1.0, false);
            const auto r = fit_sure(s, 20.0, form);
            double best = HUGE_VAL;
            for (int a = 0; a < 200; ++a) {
                const double mu = -3.0 + 6.0 * a / 199;
                for (int b = 0; b < 200; ++b) best = std::min(best, sure_objective(mu, 20.0 * b / 199, s, form));
            }
            CHECK(r.objective_value <= best + 1e-6);
            CHECK(r.objective_value == doctest::Approx(sure_objective(r.prior.mu, r.prior.gamma2, s, form)).epsilon(1e-14));
        }
    }
}

TEST_CASE("shrinkage") {
    const auto s = cal({1, -2, 4}, {1, 2, 0.5});
    for (const double b : shrink_biases(s, {0.7, 0.0})) CHECK(b == 0.7);
    const auto loose = shrink_biases(s, {0.7, 1e12});
    CHECK(loose[0] == doctest::Approx(1.0));
    CHECK(loose[1] == doctest::Approx(-2.0));
    CHECK(loose[2] == doctest::Approx(4.0));
    const auto half = shrink_biases(s, {0.0, 1.0});
    CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("internal calibration plug-in") {
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, 0.0, 1.0);
    c.observational.push_back(make_study("o", StudyKind::observational, 3.0, 1.0));
    const std::vector<double> b{1.0};
    const auto p = internal_eb_theta(c, b);
    CHECK(p.mean == 1.0);
    CHECK(p.variance == 0.5);

    Rng rng(6);
    const auto r = testgen::random_collection(rng, 5, 0);
    std::vector<double> exact;
    for (const auto& o : r.observational) exact.push_back(o.estimate - r.exp().estimate);
    CHECK(internal_eb_theta(r, exact).mean == doctest::Approx(r.exp().estimate).epsilon(1e-13).scale(1));
    CHECK_THROWS_AS(internal_eb_theta(r, b), Error);

    StudyCollection none;
    none.experimental = c.experimental;
    CHECK(internal_eb_theta(none, {}) == posterior_flat(*none.experimental));
}

TEST_CASE("observational splits") {
    Rng rng(10);
    const auto c = testgen::random_collection(rng, 5, 2);
    const auto half = split_observational(c, SplitMode::half);
    REQUIRE(half.estimation.J() == 3);
    REQUIRE(half.holdout.J() == 2);
    CHECK(half.estimation.observational[2] == c.observational[2]);
    CHECK(half.holdout.observational[0] == c.observational[3]);
    const auto eo = split_observational(c, SplitMode::even_odd);
    CHECK(eo.estimation.J() == 3);
    CHECK(eo.holdout.observational[1] == c.observational[3]);
    const auto none = split_observational(c, SplitMode::none);
    CHECK(none.estimation.observational == c.observational);
    CHECK(none.holdout.observational == c.observational);
    CHECK(half.estimation.exp() == c.exp());
    CHECK(parse_split_mode("even-odd") == SplitMode::even_odd);
}

TEST_CASE("fit report json") {
    const auto r = fit_mm_calibration(cal({1, 3}, {1, 1}));
    const auto j = nlohmann::json::parse(fit_report_json(r));
    CHECK(j["mu"] == 2.0);
    CHECK(j["gamma2"] == 0.0);
    CHECK(j["method"] == "mm");
    CHECK(j["bound_hit"] == true);
    CHECK(fit_report_json(r).rfind(R"({"mu":2.0,"gamma2":0.0,"method":"mm")", 0) == 0);
}
