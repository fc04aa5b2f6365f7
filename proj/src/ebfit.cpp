#include "ceb/ebfit.hpp"

#include "ceb/kernels.hpp"
#include "ceb/optimize.hpp"
#include "ceb/posterior.hpp"

#include <json.hpp>

#include <cmath>
#include <string>

namespace ceb {

std::string_view to_string(FitMethod m) noexcept {
    switch (m) {
        case FitMethod::mle: return "mle";
        case FitMethod::mm: return "mm";
        case FitMethod::sure: return "sure";
    }
    return "unknown";
}

FitMethod parse_fit_method(std::string_view text) {
    if (text == "mle") return FitMethod::mle;
    if (text == "mm") return FitMethod::mm;
    if (text == "sure") return FitMethod::sure;
    throw Error(Errc::invalid_argument, "unknown fit method '" + std::string(text) + "'");
}

std::string_view to_string(SplitMode m) noexcept {
    switch (m) {
        case SplitMode::half: return "half";
        case SplitMode::even_odd: return "even-odd";
        case SplitMode::none: return "none";
    }
    return "unknown";
}

SplitMode parse_split_mode(std::string_view text) {
    if (text == "half") return SplitMode::half;
    if (text == "even-odd") return SplitMode::even_odd;
    if (text == "none") return SplitMode::none;
    throw Error(Errc::invalid_argument, "unknown split mode '" + std::string(text) + "'");
}

std::string fit_report_json(const FitReport& r) {
    nlohmann::ordered_json j;
    j["mu"] = r.prior.mu;
    j["gamma2"] = r.prior.gamma2;
    j["method"] = std::string(to_string(r.method));
    j["objective"] = r.objective_value;
    j["bound_hit"] = r.bound_hit;
    j["iterations"] = r.iterations;
    j["bound"] = r.bound;
    return j.dump();
}

namespace {

struct Columns {
    Eigen::ArrayXd y;
    Eigen::ArrayXd v;
};

Columns columns_of(std::span<const StudySummary> studies) {
    for (const auto& s : studies) validate_study(s);
    return {estimates_of(studies), variances_of(studies)};
}

void check_gamma2(double gamma2) {
    if (!(gamma2 >= 0.0) || !std::isfinite(gamma2)) throw Error(Errc::invalid_argument, "gamma2 must be finite and >= 0");
}

void require_calibration(std::span<const StudySummary> calibration, std::size_t min_k) {
    if (calibration.empty()) throw Error(Errc::empty_calibration_set, "no calibration studies");
    if (calibration.size() < min_k) {
        throw Error(Errc::too_few_calibration_studies,
                    "need at least " + std::to_string(min_k) + ", got " + std::to_string(calibration.size()));
    }
}

double resolve_bound(std::optional<double> bound, std::span<const StudySummary> studies) {
    const double b = bound ? *bound : default_bound(studies);
    if (!(b > 0.0) || !std::isfinite(b)) throw Error(Errc::invalid_argument, "bound must be positive and finite");
    return b;
}

double calibration_loglik(double mu, double gamma2, const Columns& c) {
    const Eigen::ArrayXd t = c.v + gamma2;
    return kernels::sum(-0.5 * (c.y - mu).square() / t - 0.5 * t.log());
}

double profiled_mu(double gamma2, const Columns& c) {
    return kernels::weighted_mean(c.y, (c.v + gamma2).inverse());
}

double marginal_loglik(double mu, double gamma2, double ye, double ve, const Columns& o) {
    const Eigen::ArrayXd t = o.v + gamma2;
    const Eigen::ArrayXd r = o.y - mu;
    const double precision = 1.0 / ve + kernels::sum(t.inverse());
    const double numerator = ye / ve + kernels::sum(r / t);
    return 0.5 * (numerator * numerator / precision - ye * ye / ve - kernels::sum(r.square() / t) -
                  kernels::sum(t.log()) - std::log(precision));
}

double sure_objective(double mu, double gamma2, const Columns& c, SureForm form) {
    const Eigen::ArrayXd t = c.v + gamma2;
    const Eigen::ArrayXd r2 = (c.y - mu).square();
    const auto k = static_cast<double>(c.y.size());
    if (form == SureForm::stein) {
        return kernels::sum(c.v.square() * r2 / t.square() + c.v * (gamma2 - c.v) / t) / k;
    }
    return kernels::sum(c.v / t.square() * (c.v * r2 + gamma2 - c.v)) / k;
}

// d/dgamma2 at fixed mu. With mu profiled at its own optimum these are also
// the total derivatives of the profiled objectives.
double calibration_slope(double mu, double gamma2, const Columns& c) {
    const Eigen::ArrayXd t = c.v + gamma2;
    return 0.5 * kernels::sum((c.y - mu).square() / t.square() - t.inverse());
}

double marginal_slope(double mu, double gamma2, double ye, double ve, const Columns& o) {
    const Eigen::ArrayXd t = o.v + gamma2;
    const Eigen::ArrayXd r = o.y - mu;
    const double precision = 1.0 / ve + kernels::sum(t.inverse());
    const double numerator = ye / ve + kernels::sum(r / t);
    const double dp = -kernels::sum(t.square().inverse());
    const double dn = -kernels::sum(r / t.square());
    return 0.5 * (2.0 * numerator * dn / precision - numerator * numerator * dp / (precision * precision) +
                  kernels::sum(r.square() / t.square()) - kernels::sum(t.inverse()) - dp / precision);
}

double sure_slope(double mu, double gamma2, const Columns& c, SureForm form) {
    const Eigen::ArrayXd t = c.v + gamma2;
    const Eigen::ArrayXd r2 = (c.y - mu).square();
    const auto k = static_cast<double>(c.y.size());
    if (form == SureForm::stein) {
        return kernels::sum(-2.0 * c.v.square() * r2 / t.cube() + 2.0 * c.v.square() / t.square()) / k;
    }
    return kernels::sum(c.v / t.square() - 2.0 * c.v * (c.v * r2 + gamma2 - c.v) / t.cube()) / k;
}

double sure_profiled_mu(double gamma2, const Columns& c) {
    return kernels::weighted_mean(c.y, (c.v / (c.v + gamma2)).square());
}

FitReport finish(FitMethod method, double mu, const optimize::Maximum& m, double bound) {
    FitReport r;
    r.prior = {mu, m.x};
    r.method = method;
    r.objective_value = m.value;
    r.iterations = m.evaluations;
    r.bound_hit = m.x == 0.0 || m.x == bound;
    r.bound = bound;
    return r;
}

}  // namespace

double calibration_loglik(double mu, double gamma2, std::span<const StudySummary> calibration) {
    check_gamma2(gamma2);
    return calibration_loglik(mu, gamma2, columns_of(calibration));
}

double profiled_mu(double gamma2, std::span<const StudySummary> calibration) {
    check_gamma2(gamma2);
    require_calibration(calibration, 1);
    return profiled_mu(gamma2, columns_of(calibration));
}

double marginal_loglik(double mu, double gamma2, const StudyCollection& c) {
    validate_collection(c);
    check_gamma2(gamma2);
    return marginal_loglik(mu, gamma2, c.exp().estimate, c.exp().variance, columns_of(c.observational));
}

double default_bound(std::span<const StudySummary> studies) {
    double spread = 0.0;
    double max_var = 0.0;
    if (!studies.empty()) {
        const auto cols = columns_of(studies);
        max_var = cols.v.maxCoeff();
        if (cols.y.size() >= 2) {
            spread = (cols.y - cols.y.mean()).square().sum() / static_cast<double>(cols.y.size() - 1);
        }
    }
    const double b = 1e3 * std::max(spread, max_var);
    if (!(b > 0.0)) throw Error(Errc::invalid_argument, "cannot derive a gamma2 bound from empty input");
    return b;
}

FitReport fit_mle_calibration(std::span<const StudySummary> calibration, std::optional<double> bound) {
    require_calibration(calibration, 2);
    const auto cols = columns_of(calibration);
    const double b = resolve_bound(bound, calibration);
    const auto best = optimize::maximize_bounded(
        [&](double g) { return calibration_loglik(profiled_mu(g, cols), g, cols); },
        [&](double g) { return calibration_slope(profiled_mu(g, cols), g, cols); }, b);
    return finish(FitMethod::mle, profiled_mu(best.x, cols), best, b);
}

FitReport fit_mle_zero_mean(const StudyCollection& c, std::optional<double> bound) {
    validate_collection(c);
    if (c.J() < 2) {
        throw Error(Errc::too_few_observational_studies, "zero-mean fit needs J >= 2, got " + std::to_string(c.J()));
    }
    const auto& e = c.exp();
    const auto obs = columns_of(c.observational);
    const double b = resolve_bound(bound, c.observational);
    const auto best = optimize::maximize_bounded(
        [&](double g) { return marginal_loglik(0.0, g, e.estimate, e.variance, obs); },
        [&](double g) { return marginal_slope(0.0, g, e.estimate, e.variance, obs); }, b);
    return finish(FitMethod::mle, 0.0, best, b);
}

IllusionFit fit_mle_illusion(const StudyCollection& c, std::optional<double> bound) {
    validate_collection(c);
    if (c.J() < 1) throw Error(Errc::too_few_observational_studies, "illusion fit needs J >= 1");
    const auto& e = c.exp();
    const auto obs = columns_of(c.observational);
    const double b = resolve_bound(bound, c.observational);
    auto mu_of = [&](double g) { return profiled_mu(g, obs) - e.estimate; };
    const auto best = optimize::maximize_bounded(
        [&](double g) { return marginal_loglik(mu_of(g), g, e.estimate, e.variance, obs); },
        [&](double g) { return marginal_slope(mu_of(g), g, e.estimate, e.variance, obs); }, b);
    IllusionFit out;
    out.report = finish(FitMethod::mle, mu_of(best.x), best, b);
    const double precision = 1.0 / e.variance + kernels::sum((obs.v + best.x).inverse());
    out.posterior = {e.estimate, 1.0 / precision};
    return out;
}

double mm_gamma2_raw(std::span<const StudySummary> calibration) {
    require_calibration(calibration, 2);
    const auto cols = columns_of(calibration);
    return kernels::sum((cols.y - cols.y.mean()).square() - cols.v) / static_cast<double>(cols.y.size());
}

FitReport fit_mm_calibration(std::span<const StudySummary> calibration) {
    const double raw = mm_gamma2_raw(calibration);
    const auto cols = columns_of(calibration);
    FitReport r;
    r.method = FitMethod::mm;
    r.prior.gamma2 = std::max(0.0, raw);
    r.prior.mu = profiled_mu(r.prior.gamma2, cols);
    r.objective_value = calibration_loglik(r.prior.mu, r.prior.gamma2, cols);
    r.bound_hit = r.prior.gamma2 == 0.0;
    return r;
}

double mm_zero_mean_gamma2_raw(std::span<const StudySummary> holdout) {
    if (holdout.size() < 2) {
        throw Error(Errc::too_few_observational_studies,
                    "zero-mean moment matching needs >= 2 held-out studies, got " + std::to_string(holdout.size()));
    }
    const auto cols = columns_of(holdout);
    return kernels::sum(cols.y.square() - cols.v) / static_cast<double>(cols.y.size());
}

FitReport fit_mm_zero_mean(std::span<const StudySummary> holdout) {
    const double raw = mm_zero_mean_gamma2_raw(holdout);
    FitReport r;
    r.method = FitMethod::mm;
    r.prior = {0.0, std::max(0.0, raw)};
    r.objective_value = calibration_loglik(0.0, r.prior.gamma2, columns_of(holdout));
    r.bound_hit = r.prior.gamma2 == 0.0;
    return r;
}

double sure_objective(double mu, double gamma2, std::span<const StudySummary> calibration, SureForm form) {
    check_gamma2(gamma2);
    require_calibration(calibration, 1);
    return sure_objective(mu, gamma2, columns_of(calibration), form);
}

double sure_profiled_mu(double gamma2, std::span<const StudySummary> calibration) {
    check_gamma2(gamma2);
    require_calibration(calibration, 1);
    return sure_profiled_mu(gamma2, columns_of(calibration));
}

FitReport fit_sure(std::span<const StudySummary> calibration, std::optional<double> bound, SureForm form) {
    require_calibration(calibration, 2);
    const auto cols = columns_of(calibration);
    const double b = resolve_bound(bound, calibration);
    const auto best = optimize::maximize_bounded(
        [&](double g) { return -sure_objective(sure_profiled_mu(g, cols), g, cols, form); },
        [&](double g) { return -sure_slope(sure_profiled_mu(g, cols), g, cols, form); }, b);
    auto r = finish(FitMethod::sure, sure_profiled_mu(best.x, cols), best, b);
    r.objective_value = -best.value;
    return r;
}

std::vector<double> shrink_biases(std::span<const StudySummary> calibration, const BiasPrior& prior) {
    check_gamma2(prior.gamma2);
    const auto cols = columns_of(calibration);
    const Eigen::ArrayXd w = prior.gamma2 / (cols.v + prior.gamma2);
    const Eigen::ArrayXd b = w * cols.y + (1.0 - w) * prior.mu;
    return {b.data(), b.data() + b.size()};
}

GaussianPosterior internal_eb_theta(const StudyCollection& c, std::span<const double> bhat) {
    validate_collection(c);
    if (bhat.size() != c.J()) {
        throw Error(Errc::length_mismatch,
                    std::to_string(bhat.size()) + " bias estimates for " + std::to_string(c.J()) + " studies");
    }
    const auto& e = c.exp();
    if (c.J() == 0) return posterior_flat(e);
    const auto obs = columns_of(c.observational);
    const Eigen::Map<const Eigen::ArrayXd> b(bhat.data(), static_cast<Eigen::Index>(bhat.size()));
    const auto r = kernels::combine(e.estimate, e.variance, obs.y - b, obs.v);
    return {r.mean, 1.0 / r.precision};
}

SplitCollections split_observational(const StudyCollection& c, SplitMode mode) {
    SplitCollections out;
    out.estimation.experimental = c.experimental;
    out.holdout.experimental = c.experimental;
    out.estimation.calibration = c.calibration;
    out.holdout.calibration = c.calibration;
    const std::size_t j = c.J();
    for (std::size_t i = 0; i < j; ++i) {
        bool to_estimation = true;
        bool to_holdout = false;
        switch (mode) {
            case SplitMode::half:
                to_estimation = i < j - j / 2;
                to_holdout = !to_estimation;
                break;
            case SplitMode::even_odd:
                to_estimation = i % 2 == 0;
                to_holdout = !to_estimation;
                break;
            case SplitMode::none: to_holdout = true; break;
        }
        if (to_estimation) out.estimation.observational.push_back(c.observational[i]);
        if (to_holdout) out.holdout.observational.push_back(c.observational[i]);
    }
    return out;
}

}  // namespace ceb
