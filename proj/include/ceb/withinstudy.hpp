#pragma once

// Study-level (estimate, variance) summaries from unit-level data.

#include "ceb/core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ceb {

struct UnitRecord {
    Eigen::VectorXd covariate;
    bool treated = false;
    double outcome = 0.0;
    double weight = 1.0;
};

// Column-major unit table. Row i is (covariates.row(i), treatment[i],
// outcome[i], weight[i]); unit_id tracks provenance through partitioning.
struct UnitDataset {
    Eigen::MatrixXd covariates;
    Eigen::ArrayXi treatment;
    Eigen::ArrayXd outcome;
    Eigen::ArrayXd weight;
    Eigen::Array<std::int64_t, Eigen::Dynamic, 1> unit_id;

    Eigen::Index size() const noexcept { return outcome.size(); }
    Eigen::Index covariate_dim() const noexcept { return covariates.cols(); }
    Eigen::Index n_treated() const { return treatment.sum(); }
    Eigen::Index n_control() const { return size() - n_treated(); }

    UnitRecord row(Eigen::Index i) const;
    UnitDataset select(std::span<const Eigen::Index> rows) const;

    // Unit ids default to row positions.
    static UnitDataset from_rows(std::span<const UnitRecord> rows);

    // Shapes agree, treatment is 0/1, weights finite and >= 0.
    void validate() const;
};

using Estimator = std::function<double(const UnitDataset&)>;
using Propensity = std::function<double(const Eigen::VectorXd&)>;

// Weighted treated mean minus weighted control mean.
double dim_point(const UnitDataset& d);

// dim_point with the conservative Neyman variance s1^2/n1 + s0^2/n0. With
// non-unit weights each arm uses the reliability-weighted variance times
// sum(w^2)/sum(w)^2, which reduces to s^2/n for unit weights. Each arm needs
// at least two rows with positive weight.
StudySummary difference_in_means(const UnitDataset& d, std::string id = {},
                                 StudyKind kind = StudyKind::observational);

// Average over treated units of (outcome - mean outcome of its M nearest
// controls), Euclidean distance on covariates, ties to the lower row index.
// Weights are ignored.
double matching_point(const UnitDataset& d, int m);
StudySummary matching_estimate(const UnitDataset& d, int m, int bootstrap_reps, std::uint64_t seed,
                               std::string id = {}, StudyKind kind = StudyKind::observational);

inline constexpr double kOverlapEpsilon = 1e-6;

// (1/n) sum [A O / e(X) - (1 - A) O / (1 - e(X))]; propensities must lie in
// (kOverlapEpsilon, 1 - kOverlapEpsilon).
double ipw_point(const UnitDataset& d, const Propensity& propensity);
StudySummary ipw_estimate(const UnitDataset& d, const Propensity& propensity, int bootstrap_reps,
                          std::uint64_t seed, std::string id = {}, StudyKind kind = StudyKind::observational);

// Sample variance (denominator B - 1) of `estimator` over B row resamples
// with replacement. Replicate b draws from child_rng(seed, {b, attempt});
// a resample on which the estimator reports an empty arm or too few
// controls is redrawn up to 100 times before resample_degenerate.
double bootstrap_variance(const UnitDataset& d, const Estimator& estimator, int reps, std::uint64_t seed);

// Unit CSV: header x1,...,xd,a,o[,w].
UnitDataset read_units_csv(std::istream& in);
UnitDataset read_units_csv(const std::filesystem::path& path);
void write_units_csv(const UnitDataset& d, std::ostream& out);
void write_units_csv(const UnitDataset& d, const std::filesystem::path& path);

}  // namespace ceb
