#pragma once

// Empirical-Bayes fitting of the bias prior (mu, gamma2): profiled maximum
// marginal likelihood, moment matching and SURE, plus the internal
// calibration plug-in estimator.

#include "ceb/core.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ceb {

enum class FitMethod { mle, mm, sure };

std::string_view to_string(FitMethod m) noexcept;
FitMethod parse_fit_method(std::string_view text);

struct FitReport {
    BiasPrior prior;
    FitMethod method = FitMethod::mle;
    double objective_value = 0.0;
    int iterations = 0;
    // gamma2 sits exactly at 0 or at the search bound.
    bool bound_hit = false;
    // Upper end of the gamma2 search interval; 0 for closed-form fits.
    double bound = 0.0;
};

std::string fit_report_json(const FitReport& r);

// Log marginal likelihood of (y_e, y_o) under b ~ N(mu, gamma2) and a flat
// prior on the effect, additive constant dropped:
//   1/2 [ N^2/P - y_e^2/s_e^2 - sum (y_j - mu)^2/(s_j^2 + gamma2)
//         - sum log(s_j^2 + gamma2) - log P ]
// with P = 1/s_e^2 + sum 1/(s_j^2 + gamma2), N = y_e/s_e^2 + sum (y_j - mu)/(s_j^2 + gamma2).
double marginal_loglik(double mu, double gamma2, const StudyCollection& c);

// Heteroskedastic normal log density of calibration estimates,
//   sum_k -1/2 (y_k - mu)^2/(gamma2 + s_k^2) - 1/2 log(gamma2 + s_k^2).
double calibration_loglik(double mu, double gamma2, std::span<const StudySummary> calibration);

// Precision-weighted calibration mean with weights 1/(gamma2 + s_k^2).
double profiled_mu(double gamma2, std::span<const StudySummary> calibration);

// 1e3 * max(sample variance of the estimates, largest sampling variance).
double default_bound(std::span<const StudySummary> studies);

FitReport fit_mle_calibration(std::span<const StudySummary> calibration, std::optional<double> bound = {});

// mu fixed at 0; maximizes marginal_loglik over gamma2 in [0, B]. Needs J >= 2.
FitReport fit_mle_zero_mean(const StudyCollection& c, std::optional<double> bound = {});

struct IllusionFit {
    FitReport report;
    GaussianPosterior posterior;
};

// Fits (mu, gamma2) jointly from (y_e, y_o). For any gamma2 the profiled mean
// is mu(gamma2) = weighted obs mean - y_e, which pins the posterior mean to
// y_e; the returned posterior uses that identity directly.
IllusionFit fit_mle_illusion(const StudyCollection& c, std::optional<double> bound = {});

// (1/K) sum [(y_k - ybar)^2 - s_k^2], before clamping at zero.
double mm_gamma2_raw(std::span<const StudySummary> calibration);
FitReport fit_mm_calibration(std::span<const StudySummary> calibration);

// (1/J) sum (y_j^2 - s_j^2), before clamping. Used with a held-out half of
// the observational studies under the zero-mean bias assumption.
double mm_zero_mean_gamma2_raw(std::span<const StudySummary> holdout);
FitReport fit_mm_zero_mean(std::span<const StudySummary> holdout);

// SURE for the shrinkage rule b_k = w_k y_k + (1 - w_k) mu, w_k = gamma2/(s_k^2 + gamma2).
//   stein:               (1/K) sum s^4 (y - mu)^2/(s^2 + g)^2 + s^2 (g - s^2)/(s^2 + g)
//   squared_denominator: (1/K) sum s^2/(s^2 + g)^2 [s^2 (y - mu)^2 + g - s^2]
// The second variant divides the constant term by (s^2 + g) twice; it is kept
// for comparison only and drives gamma2 to 0 or to the bound.
enum class SureForm { stein, squared_denominator };

double sure_objective(double mu, double gamma2, std::span<const StudySummary> calibration,
                      SureForm form = SureForm::stein);
// Minimizer over mu at fixed gamma2 (same for both forms): weights s^4/(s^2 + g)^2.
double sure_profiled_mu(double gamma2, std::span<const StudySummary> calibration);
FitReport fit_sure(std::span<const StudySummary> calibration, std::optional<double> bound = {},
                   SureForm form = SureForm::stein);

std::vector<double> shrink_biases(std::span<const StudySummary> calibration, const BiasPrior& prior);

// Internal calibration: y_c[j] is paired with y_o[j] and bhat[j] estimates
// their shared bias.
//   mean = [y_e/s_e^2 + sum (y_j - bhat_j)/s_j^2] / [1/s_e^2 + sum 1/s_j^2]
// The variance is the reciprocal of that precision and ignores the
// uncertainty in bhat, so it is optimistic.
GaussianPosterior internal_eb_theta(const StudyCollection& c, std::span<const double> bhat);

// Sample splitting of the observational studies for the zero-mean regime.
//   half:     estimation = first ceil(J/2), holdout = last floor(J/2)
//   even_odd: estimation = even positions, holdout = odd positions
//   none:     both use every study
enum class SplitMode { half, even_odd, none };

std::string_view to_string(SplitMode m) noexcept;
SplitMode parse_split_mode(std::string_view text);

struct SplitCollections {
    StudyCollection estimation;
    StudyCollection holdout;
};

SplitCollections split_observational(const StudyCollection& c, SplitMode mode);

}  // namespace ceb
