#include "ceb/posterior.hpp"

#include "ceb/kernels.hpp"

#include <cmath>
#include <string>

namespace ceb {

namespace {

void check_prior(const BiasPrior& prior) {
    if (!std::isfinite(prior.mu) || !std::isfinite(prior.gamma2)) {
        throw Error(Errc::non_finite_value, "bias prior");
    }
    if (prior.gamma2 < 0.0) throw Error(Errc::invalid_argument, "gamma2 must be >= 0");
}

}  // namespace

GaussianPosterior posterior_flat(const StudySummary& experimental) {
    validate_study(experimental);
    return {experimental.estimate, experimental.variance};
}

GaussianPosterior posterior_given_prior(const StudyCollection& c, const BiasPrior& prior) {
    validate_collection(c);
    check_prior(prior);
    const auto& e = c.exp();
    if (c.J() == 0) return posterior_flat(e);
    const Eigen::ArrayXd y = estimates_of(c.observational);
    const Eigen::ArrayXd v = variances_of(c.observational);
    const auto r = kernels::combine(e.estimate, e.variance, y - prior.mu, v + prior.gamma2);
    return {r.mean, 1.0 / r.precision};
}

GaussianPosterior posterior_zero_mean(const StudyCollection& c, double gamma2) {
    validate_collection(c);
    check_prior({0.0, gamma2});
    const auto& e = c.exp();
    if (c.J() == 0) return posterior_flat(e);
    const Eigen::ArrayXd y = estimates_of(c.observational);
    const Eigen::ArrayXd w = (variances_of(c.observational) + gamma2).inverse();
    const double precision = 1.0 / e.variance + kernels::sum(w);
    const double correction = kernels::sum(w * (y - e.estimate)) / precision;
    return {e.estimate + correction, 1.0 / precision};
}

GaussianPosterior posterior_ceb(const StudyCollection& c, const BiasPrior& fitted) {
    return posterior_given_prior(c, fitted);
}

#if CEB_WITH_ORACLES
GaussianPosterior posterior_quadrature_oracle(const StudyCollection& c, const BiasPrior& prior,
                                              double halfwidth_sds, long grid_points) {
    validate_collection(c);
    check_prior(prior);
    if (grid_points < 1001) throw Error(Errc::invalid_argument, "grid_points must be >= 1001");
    if (!(halfwidth_sds > 0.0)) throw Error(Errc::invalid_argument, "halfwidth must be positive");

    const auto centre = posterior_given_prior(c, prior);
    const double half = halfwidth_sds * centre.sd();
    const auto& e = c.exp();
    const Eigen::ArrayXd y = estimates_of(c.observational);
    const Eigen::ArrayXd v = variances_of(c.observational) + prior.gamma2;

    // Log density of (y_e, y_o) given theta with the biases integrated out.
    const Eigen::ArrayXd theta = Eigen::ArrayXd::LinSpaced(grid_points, centre.mean - half, centre.mean + half);
    Eigen::ArrayXd logp = -0.5 * (e.estimate - theta).square() / e.variance;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
        logp -= 0.5 * (y[j] - prior.mu - theta).square() / v[j];
    }
    const Eigen::ArrayXd w = (logp - logp.maxCoeff()).exp();
    const double mass = w.sum();
    const double edge = (w[0] + w[grid_points - 1]) / mass;
    if (edge > 1e-9) {
        throw Error(Errc::grid_too_narrow, "boundary mass " + std::to_string(edge));
    }
    const double mean = (w * theta).sum() / mass;
    const double var = (w * (theta - mean).square()).sum() / mass;
    return {mean, var};
}
#endif

}  // namespace ceb
