#pragma once

// The four ways of setting the bias prior, each ending in a posterior for the
// causal effect.

#include "ceb/core.hpp"
#include "ceb/ebfit.hpp"

#include <optional>
#include <string_view>

namespace ceb {

// flat: improper prior on the biases, experiment only.
// eb0:  zero-mean prior, gamma2 fitted on a held-out part of the
//       observational studies.
// eb:   (mu, gamma2) fitted jointly from experiment and observational studies.
// ceb:  (mu, gamma2) fitted on calibration studies.
enum class Model { flat, eb0, eb, ceb };

std::string_view to_string(Model m) noexcept;
Model parse_model(std::string_view text);

struct RegimeOptions {
    // Unset picks the regime default: mle for eb0 and eb, mm for ceb.
    std::optional<FitMethod> method;
    SplitMode split = SplitMode::half;
    std::optional<double> bound;
};

struct RegimeResult {
    GaussianPosterior posterior;
    std::optional<FitReport> fit;  // empty for flat
};

// Throws regime_requirement_unmet when the collection cannot support the
// regime (eb0 needs J >= 2 and a holdout of at least 2 studies, eb needs
// J >= 1, ceb needs K >= 2), and invalid_argument for a fit method the
// regime does not define.
RegimeResult run_regime(Model model, const StudyCollection& c, const RegimeOptions& opts = {});

GaussianPosterior model_dispatch(Model model, const StudyCollection& c, std::optional<FitMethod> method = {});

}  // namespace ceb
