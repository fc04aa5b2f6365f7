#include "ceb/core.hpp"

#include <cmath>

namespace ceb {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::non_positive_variance: return "NonPositiveVariance";
        case Errc::non_finite_value: return "NonFiniteValue";
        case Errc::kind_mismatch: return "KindMismatch";
        case Errc::missing_experimental: return "MissingExperimental";
        case Errc::duplicate_experimental: return "DuplicateExperimental";
        case Errc::parse_error: return "ParseError";
        case Errc::io_error: return "IoError";
        case Errc::grid_too_narrow: return "GridTooNarrow";
        case Errc::empty_calibration_set: return "EmptyCalibrationSet";
        case Errc::too_few_calibration_studies: return "TooFewCalibrationStudies";
        case Errc::too_few_observational_studies: return "TooFewObservationalStudies";
        case Errc::non_finite_objective: return "NonFiniteObjective";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::one_arm_empty: return "OneArmEmpty";
        case Errc::not_enough_controls: return "NotEnoughControls";
        case Errc::propensity_out_of_bounds: return "PropensityOutOfBounds";
        case Errc::resample_degenerate: return "ResampleDegenerate";
        case Errc::too_few_units: return "TooFewUnits";
        case Errc::degenerate_grid: return "DegenerateGrid";
        case Errc::infeasible_allocation: return "InfeasibleAllocation";
        case Errc::search_space_too_large: return "SearchSpaceTooLarge";
        case Errc::regime_requirement_unmet: return "RegimeRequirementUnmet";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

std::string_view to_string(StudyKind kind) noexcept {
    switch (kind) {
        case StudyKind::experimental: return "experimental";
        case StudyKind::observational: return "observational";
        case StudyKind::calibration: return "calibration";
    }
    return "unknown";
}

StudyKind parse_study_kind(std::string_view text) {
    if (text == "experimental") return StudyKind::experimental;
    if (text == "observational") return StudyKind::observational;
    if (text == "calibration") return StudyKind::calibration;
    throw Error(Errc::parse_error, "unknown study kind '" + std::string(text) + "'");
}

double GaussianPosterior::sd() const { return std::sqrt(variance); }
double GaussianPosterior::lower95() const { return mean - 1.96 * sd(); }
double GaussianPosterior::upper95() const { return mean + 1.96 * sd(); }

const StudySummary& StudyCollection::exp() const {
    if (!experimental) throw Error(Errc::missing_experimental, "collection has no experimental study");
    return *experimental;
}

StudyCollection StudyCollection::from_studies(std::span<const StudySummary> rows) {
    StudyCollection c;
    for (const auto& s : rows) {
        switch (s.kind) {
            case StudyKind::experimental:
                if (c.experimental) {
                    throw Error(Errc::duplicate_experimental,
                                "'" + s.id + "' after '" + c.experimental->id + "'");
                }
                c.experimental = s;
                break;
            case StudyKind::observational: c.observational.push_back(s); break;
            case StudyKind::calibration: c.calibration.push_back(s); break;
        }
    }
    return c;
}

std::vector<StudySummary> StudyCollection::to_studies() const {
    std::vector<StudySummary> rows;
    rows.reserve(J() + K() + 1);
    if (experimental) rows.push_back(*experimental);
    rows.insert(rows.end(), observational.begin(), observational.end());
    rows.insert(rows.end(), calibration.begin(), calibration.end());
    return rows;
}

StudySummary make_study(std::string id, StudyKind kind, double estimate, double variance) {
    StudySummary s{std::move(id), kind, estimate, variance};
    validate_study(s);
    return s;
}

void validate_study(const StudySummary& s) {
    if (!std::isfinite(s.estimate)) throw Error(Errc::non_finite_value, s.id);
    if (!std::isfinite(s.variance)) throw Error(Errc::non_finite_value, s.id);
    if (!(s.variance > 0.0)) throw Error(Errc::non_positive_variance, s.id);
}

namespace {

void check_slot(std::span<const StudySummary> studies, StudyKind expected) {
    for (const auto& s : studies) {
        if (s.kind != expected) {
            throw Error(Errc::kind_mismatch, "'" + s.id + "' is " + std::string(to_string(s.kind)) +
                                                 " in the " + std::string(to_string(expected)) + " slot");
        }
        validate_study(s);
    }
}

}  // namespace

const StudyCollection& validate_collection(const StudyCollection& c) {
    const auto& e = c.exp();
    check_slot(std::span(&e, 1), StudyKind::experimental);
    check_slot(c.observational, StudyKind::observational);
    check_slot(c.calibration, StudyKind::calibration);
    return c;
}

Eigen::ArrayXd estimates_of(std::span<const StudySummary> studies) {
    Eigen::ArrayXd out(static_cast<Eigen::Index>(studies.size()));
    for (std::size_t i = 0; i < studies.size(); ++i) out[static_cast<Eigen::Index>(i)] = studies[i].estimate;
    return out;
}

Eigen::ArrayXd variances_of(std::span<const StudySummary> studies) {
    Eigen::ArrayXd out(static_cast<Eigen::Index>(studies.size()));
    for (std::size_t i = 0; i < studies.size(); ++i) out[static_cast<Eigen::Index>(i)] = studies[i].variance;
    return out;
}

}  // namespace ceb
