#pragma once

// Study-level domain types shared by every module.

#include <Eigen/Core>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ceb {

enum class Errc {
    invalid_argument,
    non_positive_variance,
    non_finite_value,
    kind_mismatch,
    missing_experimental,
    duplicate_experimental,
    parse_error,
    io_error,
    grid_too_narrow,
    empty_calibration_set,
    too_few_calibration_studies,
    too_few_observational_studies,
    non_finite_objective,
    length_mismatch,
    one_arm_empty,
    not_enough_controls,
    propensity_out_of_bounds,
    resample_degenerate,
    too_few_units,
    degenerate_grid,
    infeasible_allocation,
    search_space_too_large,
    regime_requirement_unmet,
};

std::string_view to_string(Errc code) noexcept;

// Every library failure is reported through this type; `code()` identifies
// the condition and `what()` carries the offending id / row / line.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

enum class StudyKind { experimental, observational, calibration };

std::string_view to_string(StudyKind kind) noexcept;
StudyKind parse_study_kind(std::string_view text);

struct StudySummary {
    std::string id;
    StudyKind kind = StudyKind::observational;
    double estimate = 0.0;
    double variance = 1.0;

    bool operator==(const StudySummary&) const = default;
};

// Gaussian population of observational biases, b ~ N(mu, gamma2).
struct BiasPrior {
    double mu = 0.0;
    double gamma2 = 0.0;

    bool operator==(const BiasPrior&) const = default;
};

struct GaussianPosterior {
    double mean = 0.0;
    double variance = 1.0;

    double sd() const;
    // Symmetric normal interval mean +/- 1.96 sd.
    double lower95() const;
    double upper95() const;

    bool operator==(const GaussianPosterior&) const = default;
};

// One experimental study plus J observational and K calibration studies for a
// single causal question. The experimental slot is optional only so that
// calibration-only inputs can be represented; every posterior requires it.
struct StudyCollection {
    std::optional<StudySummary> experimental;
    std::vector<StudySummary> observational;
    std::vector<StudySummary> calibration;

    // Throws missing_experimental when the slot is empty.
    const StudySummary& exp() const;

    std::size_t J() const noexcept { return observational.size(); }
    std::size_t K() const noexcept { return calibration.size(); }

    bool operator==(const StudyCollection&) const = default;

    // Assembles a collection from rows in file order. Errors on a second
    // experimental row; a missing experimental row is allowed here.
    static StudyCollection from_studies(std::span<const StudySummary> rows);

    // Flattens back to rows: experimental first, then observational, then
    // calibration.
    std::vector<StudySummary> to_studies() const;
};

StudySummary make_study(std::string id, StudyKind kind, double estimate, double variance);

void validate_study(const StudySummary& s);

// Returns `c` unchanged when every invariant holds. Idempotent.
const StudyCollection& validate_collection(const StudyCollection& c);

Eigen::ArrayXd estimates_of(std::span<const StudySummary> studies);
Eigen::ArrayXd variances_of(std::span<const StudySummary> studies);

}  // namespace ceb
