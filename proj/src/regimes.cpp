#include "ceb/regimes.hpp"

#include "ceb/posterior.hpp"

#include <string>

namespace ceb {

std::string_view to_string(Model m) noexcept {
    switch (m) {
        case Model::flat: return "flat";
        case Model::eb0: return "eb0";
        case Model::eb: return "eb";
        case Model::ceb: return "ceb";
    }
    return "unknown";
}

Model parse_model(std::string_view text) {
    if (text == "flat") return Model::flat;
    if (text == "eb0") return Model::eb0;
    if (text == "eb") return Model::eb;
    if (text == "ceb") return Model::ceb;
    throw Error(Errc::invalid_argument, "unknown model '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void unmet(const std::string& what) { throw Error(Errc::regime_requirement_unmet, what); }

[[noreturn]] void unsupported(Model model, FitMethod method) {
    throw Error(Errc::invalid_argument,
                "model " + std::string(to_string(model)) + " has no '" + std::string(to_string(method)) + "' fit");
}

RegimeResult eb0(const StudyCollection& c, const RegimeOptions& opts) {
    if (c.J() < 2) unmet("zero-mean EB needs more than one observational study, got J = " + std::to_string(c.J()));
    const auto split = split_observational(c, opts.split);
    if (split.holdout.J() < 2) {
        unmet("zero-mean EB with a " + std::string(to_string(opts.split)) + " split needs at least 2 held-out studies (J >= 4); got J = " +
              std::to_string(c.J()) + ", try split 'none'");
    }
    const auto method = opts.method.value_or(FitMethod::mle);
    FitReport fit;
    switch (method) {
        case FitMethod::mle: fit = fit_mle_zero_mean(split.holdout, opts.bound); break;
        case FitMethod::mm: fit = fit_mm_zero_mean(split.holdout.observational); break;
        case FitMethod::sure: unsupported(Model::eb0, method);
    }
    return {posterior_zero_mean(split.estimation, fit.prior.gamma2), fit};
}

RegimeResult eb(const StudyCollection& c, const RegimeOptions& opts) {
    if (c.J() < 1) unmet("full EB needs at least one observational study");
    const auto method = opts.method.value_or(FitMethod::mle);
    if (method != FitMethod::mle) unsupported(Model::eb, method);
    auto fit = fit_mle_illusion(c, opts.bound);
    return {fit.posterior, fit.report};
}

RegimeResult ceb(const StudyCollection& c, const RegimeOptions& opts) {
    if (c.K() < 2) unmet("calibrated EB needs at least 2 calibration studies, got K = " + std::to_string(c.K()));
    FitReport fit;
    switch (opts.method.value_or(FitMethod::mm)) {
        case FitMethod::mle: fit = fit_mle_calibration(c.calibration, opts.bound); break;
        case FitMethod::mm: fit = fit_mm_calibration(c.calibration); break;
        case FitMethod::sure: fit = fit_sure(c.calibration, opts.bound); break;
    }
    return {posterior_ceb(c, fit.prior), fit};
}

}  // namespace

RegimeResult run_regime(Model model, const StudyCollection& c, const RegimeOptions& opts) {
    validate_collection(c);
    c.exp();
    switch (model) {
        case Model::flat: return {posterior_flat(c.exp()), std::nullopt};
        case Model::eb0: return eb0(c, opts);
        case Model::eb: return eb(c, opts);
        case Model::ceb: return ceb(c, opts);
    }
    throw Error(Errc::invalid_argument, "unknown model");
}

GaussianPosterior model_dispatch(Model model, const StudyCollection& c, std::optional<FitMethod> method) {
    RegimeOptions opts;
    opts.method = method;
    return run_regime(model, c, opts).posterior;
}

}  // namespace ceb
