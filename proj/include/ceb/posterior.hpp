#pragma once

// Closed-form posteriors of the causal effect under the four bias-prior
// regimes, with a grid-quadrature cross-check.

#include "ceb/core.hpp"

namespace ceb {

// Flat prior on the biases: the analytic gamma2 -> infinity limit. Any
// observational studies are uninformative, so only the experiment is used.
GaussianPosterior posterior_flat(const StudySummary& experimental);

// Gaussian bias prior with known (mu, gamma2), flat prior on the effect:
//   precision = 1/s_e^2 + sum_j 1/(s_j^2 + gamma2)
//   mean      = [y_e/s_e^2 + sum_j (y_j - mu)/(s_j^2 + gamma2)] / precision
GaussianPosterior posterior_given_prior(const StudyCollection& c, const BiasPrior& prior);

// Zero-mean bias prior written as the experiment plus a correction,
//   mean = y_e + sum_j (y_j - y_e)/(s_j^2 + gamma2) / precision.
// Algebraically equal to posterior_given_prior(c, {0, gamma2}).
GaussianPosterior posterior_zero_mean(const StudyCollection& c, double gamma2);

// Same arithmetic as posterior_given_prior; the prior is expected to come
// from a calibration fit (or be the true prior, for oracle comparisons).
GaussianPosterior posterior_ceb(const StudyCollection& c, const BiasPrior& fitted);

#if CEB_WITH_ORACLES
// Integrates the unnormalized posterior density of the effect on a uniform
// grid of `grid_points` nodes spanning +/- `halfwidth_sds` closed-form
// standard deviations around the closed-form mean. Biases are marginalized
// analytically. Throws grid_too_narrow when the two boundary cells hold more
// than 1e-9 of the mass.
GaussianPosterior posterior_quadrature_oracle(const StudyCollection& c, const BiasPrior& prior,
                                              double halfwidth_sds = 10.0, long grid_points = 100001);
#endif

}  // namespace ceb
