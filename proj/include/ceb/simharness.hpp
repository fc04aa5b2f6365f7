#pragma once

// Seeded Monte Carlo risk evaluation on the normal-means model:
//   y_e ~ N(theta*, s_e^2)
//   b_j ~ N(mu*, g*),   y_o,j ~ N(theta* + b_j, s_o^2)
//   b_k ~ N(mu*, g*),   y_c,k ~ N(b_k, s_c^2)

#include "ceb/core.hpp"
#include "ceb/ebfit.hpp"
#include "ceb/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ceb::sim {

enum class Arm { naive, eb0, eb_illusion, ceb_mm, ceb_mle, oracle };

std::string_view to_string(Arm a) noexcept;
Arm parse_arm(std::string_view text);
std::vector<Arm> all_arms();

struct SimConfig {
    double theta_star = 1.0;
    double mu_star = 0.5;
    double gamma2_star = 1.0;
    double sigma_e = 1.0;
    double sigma_o = 1.0;
    double sigma_c = 1.0;
    std::vector<int> J_grid{5, 10, 50, 100, 200, 500};
    int replicates = 2000;
    std::uint64_t seed = kDefaultSeed;
    std::vector<Arm> arms = all_arms();
    // Splitting used by the eb0 arm.
    SplitMode eb0_split = SplitMode::half;

    void validate() const;
};

struct SimRow {
    Arm arm = Arm::naive;
    int J = 0;
    double mse = 0.0;
    double mc_se = 0.0;
    double re = 0.0;  // mse / naive mse at the same J
    int failures = 0;  // replicates dropped because a fit raised
};

struct SimResult {
    std::vector<SimRow> rows;  // ordered by J, then by cfg.arms

    const SimRow& at(Arm arm, int J) const;
    std::vector<const SimRow*> series(Arm arm) const;
};

// Replicate `replicate_index` at (J, K). Draws come from
// child_rng(seed, {J, replicate_index}) in the order y_e, observational
// (bias then estimate), calibration (bias then estimate), so every arm is
// evaluated on the same draws.
StudyCollection generate_collection(const SimConfig& cfg, int J, int K, std::uint64_t replicate_index);

// Point estimate of theta produced by one arm.
double arm_estimate(Arm arm, const StudyCollection& c, const SimConfig& cfg);

// K = J at every grid point. Replicates are spread over `threads` workers;
// reductions run in replicate order so the result does not depend on the
// thread count. The naive arm is always evaluated for RE.
SimResult run_sweep(const SimConfig& cfg, int threads = 1);

// Least-squares slope of log(mse) against log(J) over the arm's rows.
double loglog_slope(const SimResult& result, Arm arm);
double loglog_slope(const std::vector<double>& J, const std::vector<double>& mse);

// CSV with header arm,J,mse,mc_se,re.
void write_result_csv(const SimResult& r, std::ostream& out);
std::string result_csv(const SimResult& r);

}  // namespace ceb::sim
