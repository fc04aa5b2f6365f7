#pragma once

// Budgeted allocation of experimental, observational and calibration studies
// that maximizes the posterior precision of the effect.

#include "ceb/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ceb::alloc {

struct AllocationProblem {
    double budget = 0.0;
    double cost_exp = 1.0;
    double cost_obs = 1.0;
    double cost_cal = 1.0;
    double sigma_e2 = 1.0;
    std::vector<double> sigma_o2;  // one entry per observational candidate
    std::function<double(int)> gamma2_of_nc;
    int nc_max = 0;

    void validate() const;
};

struct Allocation {
    int n_e = 0;
    int n_c = 0;
    std::vector<bool> z;  // chosen observational candidates
    double objective = 0.0;

    double cost(const AllocationProblem& p) const;
};

// gamma2(n_c) = gamma0_2 * (1 + c / max(n_c, 1)). Fewer calibration studies
// mean a less certain, and here inflated, bias variance.
std::function<double(int)> default_gamma2(double gamma0_2, double c);

// n_e / s_e^2 + sum_{z_j} 1/(s_j^2 + gamma2(n_c)). Throws
// infeasible_allocation when the cost exceeds the budget or a count is
// negative.
double precision_objective(const Allocation& a, const AllocationProblem& p);

// For each n_c: greedy fill of the LP relaxation by value per cost, rounded
// down, leftover spent on the best remaining affordable item, then local
// search over single add / drop-and-refill moves. Best over n_c, lowest n_c on
// ties.
Allocation solve_greedy(const AllocationProblem& p);

// Exhaustive over n_c and candidate subsets; the leftover budget buys
// experiments. Throws search_space_too_large past 1e7 nodes.
Allocation solve_bruteforce(const AllocationProblem& p);

std::string allocation_json(const Allocation& a, const AllocationProblem& p);

}  // namespace ceb::alloc
