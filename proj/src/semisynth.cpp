#include "ceb/semisynth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ceb::semisynth {

namespace {

// Stream labels so that population, partition and calibration draws never
// share a child stream.
constexpr std::uint64_t kPopulationStream = 1;
constexpr std::uint64_t kPartitionStream = 2;
constexpr std::uint64_t kCalibrationStream = 3;

Eigen::ArrayXd propensities(const UnitDataset& d, double propensity_beta) {
    Eigen::ArrayXd e(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) e[i] = logistic(propensity_beta * d.covariates(i, 0));
    return e;
}

}  // namespace

void DgpConfig::validate() const {
    if (n_parts < 2) throw Error(Errc::invalid_argument, "n_parts must be >= 2");
    if (n_units < 2 * static_cast<Eigen::Index>(n_parts)) throw Error(Errc::invalid_argument, "n_units must be >= 2 * n_parts");
    if (!(noise_sd > 0.0)) throw Error(Errc::invalid_argument, "noise_sd must be > 0");
    if (!(treated_fraction > 0.0 && treated_fraction < 1.0)) throw Error(Errc::invalid_argument, "treated_fraction must be in (0, 1)");
    if (delta.size() < 1) throw Error(Errc::invalid_argument, "delta needs at least one covariate");
    if (!delta.allFinite() || !std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(propensity_beta)) {
        throw Error(Errc::non_finite_value, "dgp coefficients");
    }
}

double logistic(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

Population generate_population(const DgpConfig& cfg) {
    cfg.validate();
    auto rng = child_rng(cfg.seed, {kPopulationStream});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution assign(cfg.treated_fraction);

    const auto n = cfg.n_units;
    const auto dim = cfg.delta.size();
    Population pop;
    auto& u = pop.units;
    u.covariates.resize(n, dim);
    u.treatment.resize(n);
    u.outcome.resize(n);
    u.weight = Eigen::ArrayXd::Ones(n);
    u.unit_id.resize(n);
    pop.outcome0.resize(n);
    pop.outcome1.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < dim; ++k) u.covariates(i, k) = normal(rng);
        u.treatment[i] = assign(rng) ? 1 : 0;
        const double base = cfg.alpha + u.covariates.row(i).dot(cfg.delta) + cfg.noise_sd * normal(rng);
        pop.outcome0[i] = base;
        pop.outcome1[i] = base + cfg.beta;
        u.outcome[i] = u.treatment[i] ? pop.outcome1[i] : pop.outcome0[i];
        u.unit_id[i] = i;
    }
    pop.ate = cfg.beta;
    return pop;
}

std::vector<UnitDataset> partition_stratified(const UnitDataset& d, int n_parts, std::uint64_t seed) {
    if (n_parts < 1) throw Error(Errc::invalid_argument, "n_parts must be >= 1");
    std::vector<Eigen::Index> treated;
    std::vector<Eigen::Index> control;
    for (Eigen::Index i = 0; i < d.size(); ++i) (d.treatment[i] ? treated : control).push_back(i);
    const auto parts = static_cast<std::size_t>(n_parts);
    if (treated.size() < parts || control.size() < parts) {
        throw Error(Errc::too_few_units, std::to_string(treated.size()) + " treated and " + std::to_string(control.size()) +
                                             " control units for " + std::to_string(n_parts) + " parts");
    }
    auto rng = child_rng(seed, {kPartitionStream});
    std::shuffle(treated.begin(), treated.end(), rng);
    std::shuffle(control.begin(), control.end(), rng);

    std::vector<std::vector<Eigen::Index>> members(parts);
    for (std::size_t k = 0; k < treated.size(); ++k) members[k % parts].push_back(treated[k]);
    for (std::size_t k = 0; k < control.size(); ++k) members[(k + treated.size()) % parts].push_back(control[k]);

    std::vector<UnitDataset> out;
    out.reserve(parts);
    for (auto& m : members) {
        std::sort(m.begin(), m.end());
        out.push_back(d.select(m));
    }
    return out;
}

ConfoundedPart induce_confounding(const UnitDataset& part, double propensity_beta, const Eigen::VectorXd& delta) {
    if (part.covariate_dim() < 1 || delta.size() != part.covariate_dim()) {
        throw Error(Errc::invalid_argument, "delta must match the covariate dimension");
    }
    const auto n1 = part.n_treated();
    if (n1 == 0 || n1 == part.size()) throw Error(Errc::one_arm_empty, "part needs both arms");

    const Eigen::ArrayXd e = propensities(part, propensity_beta);
    const Eigen::ArrayXd f = 1.0 - e;
    const double ebar = e.mean();
    const double fbar = f.mean();
    ConfoundedPart out{part, 0.0};
    out.data.weight = (part.treatment == 1).select(e / ebar, f / fbar);
    const Eigen::VectorXd treated = part.covariates.transpose() * e.matrix() / e.sum();
    const Eigen::VectorXd control = part.covariates.transpose() * f.matrix() / f.sum();
    out.bias = delta.dot(treated - control);
    return out;
}

UnitDataset make_calibration(const UnitDataset& part, double propensity_beta, std::uint64_t seed) {
    auto rng = child_rng(seed, {kCalibrationStream});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    UnitDataset out = part;
    out.weight.setOnes();
    const Eigen::ArrayXd e = propensities(part, propensity_beta);
    for (Eigen::Index i = 0; i < part.size(); ++i) out.treatment[i] = unif(rng) < e[i] ? 1 : 0;
    return out;
}

BuiltStudies build_study_collection(const std::vector<UnitDataset>& parts, const DgpConfig& cfg) {
    if (parts.size() < 2) throw Error(Errc::invalid_argument, "need at least 2 parts");
    BuiltStudies out;
    out.experimental_data = parts.front();
    out.studies.experimental = difference_in_means(parts.front(), "exp-1", StudyKind::experimental);
    for (std::size_t j = 1; j < parts.size(); ++j) {
        const auto label = std::to_string(j + 1);
        auto obs = induce_confounding(parts[j], cfg.propensity_beta, cfg.delta);
        out.studies.observational.push_back(difference_in_means(obs.data, "obs-" + label, StudyKind::observational));
        out.bias.push_back(obs.bias);
        out.observational_data.push_back(std::move(obs.data));

        const auto part_seed = child_rng(cfg.seed, {kCalibrationStream, static_cast<std::uint64_t>(j)})();
        auto cal = make_calibration(parts[j], cfg.propensity_beta, part_seed);
        out.studies.calibration.push_back(difference_in_means(cal, "cal-" + label, StudyKind::calibration));
        out.calibration_data.push_back(std::move(cal));
    }
    validate_collection(out.studies);
    return out;
}

PipelineRun run_pipeline(const DgpConfig& cfg) {
    PipelineRun run;
    run.population = generate_population(cfg);
    const auto parts = partition_stratified(run.population.units, cfg.n_parts, cfg.seed);
    run.built = build_study_collection(parts, cfg);
    const auto& b = run.built.bias;
    run.bias_mean = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    return run;
}

}  // namespace ceb::semisynth
