#pragma once

// Semi-synthetic pipeline: a randomized population under a linear outcome
// model, split into parts that become one experimental study and paired
// confounded-observational / pseudo-treatment calibration studies.

#include "ceb/core.hpp"
#include "ceb/rng.hpp"
#include "ceb/withinstudy.hpp"

#include <cstdint>
#include <vector>

namespace ceb::semisynth {

// O = alpha + beta * A + delta . X + eps, eps ~ N(0, noise_sd^2), X ~ N(0, I).
// Only covariate 1 drives the confounded propensity
// e(X) = logistic(propensity_beta * X_1).
struct DgpConfig {
    Eigen::Index n_units = 50000;
    double alpha = 0.0;
    double beta = -0.5;
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, 1.0);
    double noise_sd = 1.0;
    double propensity_beta = 0.5;
    int n_parts = 100;
    double treated_fraction = 0.5;
    std::uint64_t seed = kDefaultSeed;

    void validate() const;
};

struct Population {
    UnitDataset units;  // randomized assignment
    Eigen::ArrayXd outcome0;
    Eigen::ArrayXd outcome1;
    double ate = 0.0;  // the beta coefficient
};

Population generate_population(const DgpConfig& cfg);

double logistic(double u);

// Shuffles each arm and deals it round-robin into n_parts parts, so arm counts
// differ by at most one between parts. Rows inside a part keep input order.
std::vector<UnitDataset> partition_stratified(const UnitDataset& d, int n_parts, std::uint64_t seed);

struct ConfoundedPart {
    UnitDataset data;
    // delta . (mean of X weighted by e(X) - mean of X weighted by 1 - e(X)),
    // over the whole part: the imbalance the design induces, without the
    // chance imbalance of the randomized arms. Zero when propensity_beta = 0.
    double bias = 0.0;
};

// Reweights treated rows by e(X)/mean(e) and control rows by
// (1 - e(X))/mean(1 - e), means over the part, so that the weighted
// treatment probability given X follows e(X). Weights are all 1 when
// propensity_beta = 0.
ConfoundedPart induce_confounding(const UnitDataset& part, double propensity_beta, const Eigen::VectorXd& delta);

// Replaces the treatment with an inert pseudo-treatment drawn from
// Bernoulli(e(X)) and resets weights to 1; outcomes are untouched.
UnitDataset make_calibration(const UnitDataset& part, double propensity_beta, std::uint64_t seed);

struct BuiltStudies {
    StudyCollection studies;
    UnitDataset experimental_data;
    std::vector<UnitDataset> observational_data;
    std::vector<UnitDataset> calibration_data;
    std::vector<double> bias;  // induced bias of each observational part
};

// Part 1 is the experiment (difference in means on the randomized
// assignment). Every later part yields one observational study (confounded
// reweighting, difference in means ignoring X) and one calibration study
// (pseudo-treatment difference in means).
BuiltStudies build_study_collection(const std::vector<UnitDataset>& parts, const DgpConfig& cfg);

struct PipelineRun {
    Population population;
    BuiltStudies built;
    double bias_mean = 0.0;
};

PipelineRun run_pipeline(const DgpConfig& cfg);

}  // namespace ceb::semisynth
