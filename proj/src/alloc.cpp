#include "ceb/alloc.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ceb::alloc {

void AllocationProblem::validate() const {
    if (!std::isfinite(budget) || budget < 0.0) throw Error(Errc::invalid_argument, "budget must be finite and >= 0");
    for (const double c : {cost_exp, cost_obs, cost_cal}) {
        if (!(c > 0.0) || !std::isfinite(c)) throw Error(Errc::invalid_argument, "costs must be positive and finite");
    }
    if (!(sigma_e2 > 0.0) || !std::isfinite(sigma_e2)) throw Error(Errc::non_positive_variance, "sigma_e2");
    for (std::size_t j = 0; j < sigma_o2.size(); ++j) {
        if (!(sigma_o2[j] > 0.0) || !std::isfinite(sigma_o2[j])) {
            throw Error(Errc::non_positive_variance, "observational candidate " + std::to_string(j + 1));
        }
    }
    if (nc_max < 0) throw Error(Errc::invalid_argument, "nc_max must be >= 0");
    if (!gamma2_of_nc) throw Error(Errc::invalid_argument, "gamma2_of_nc is not set");
}

double Allocation::cost(const AllocationProblem& p) const {
    const auto n_o = std::count(z.begin(), z.end(), true);
    return n_e * p.cost_exp + static_cast<double>(n_o) * p.cost_obs + n_c * p.cost_cal;
}

std::function<double(int)> default_gamma2(double gamma0_2, double c) {
    if (!(gamma0_2 >= 0.0) || !(c >= 0.0)) throw Error(Errc::invalid_argument, "gamma0^2 and c must be >= 0");
    return [gamma0_2, c](int n_c) { return gamma0_2 * (1.0 + c / std::max(n_c, 1)); };
}

namespace {

double gamma2_at(const AllocationProblem& p, int n_c) {
    const double g = p.gamma2_of_nc(n_c);
    if (!(g >= 0.0) || !std::isfinite(g)) {
        throw Error(Errc::invalid_argument, "gamma2_of_nc(" + std::to_string(n_c) + ") must be finite and >= 0");
    }
    return g;
}

// Whole units of `unit` that fit in `amount`, robust to rounding in the
// division.
int units_within(double amount, double unit) {
    if (amount < 0.0) return 0;
    auto n = static_cast<long long>(std::floor(amount / unit));
    while (n > 0 && static_cast<double>(n) * unit > amount) --n;
    while (static_cast<double>(n + 1) * unit <= amount) ++n;
    return static_cast<int>(n);
}

// Search state for one fixed n_c.
struct State {
    int n_e = 0;
    std::vector<bool> z;
    double value = 0.0;
};

struct FixedNc {
    const AllocationProblem& p;
    int n_c;
    double budget;                  // left after calibration
    std::vector<double> v;          // candidate precision contributions
    std::vector<std::size_t> order; // candidates by descending value, lower index first on ties

    FixedNc(const AllocationProblem& prob, int nc) : p(prob), n_c(nc), budget(prob.budget - nc * prob.cost_cal) {
        const double g = gamma2_at(p, n_c);
        v.resize(p.sigma_o2.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = 1.0 / (p.sigma_o2[j] + g);
        order.resize(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    }

    int count(const State& s) const { return static_cast<int>(std::count(s.z.begin(), s.z.end(), true)); }
    double spent(const State& s) const { return s.n_e * p.cost_exp + count(s) * p.cost_obs; }
    double left(const State& s) const { return budget - spent(s); }

    void score(State& s) const {
        s.value = s.n_e / p.sigma_e2;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (s.z[j]) s.value += v[j];
        }
    }

    // Adds unselected candidates, best first, while they fit.
    void fill_candidates(State& s) const {
        for (const auto j : order) {
            if (!s.z[j] && p.cost_obs <= left(s)) s.z[j] = true;
        }
    }

    // Greedy by value per cost. Candidates win ratio ties against the experiment.
    State greedy() const {
        State s;
        s.z.assign(v.size(), false);
        const double exp_ratio = 1.0 / p.sigma_e2 / p.cost_exp;
        bool exp_done = false;
        auto take_experiments = [&] {
            s.n_e += units_within(left(s), p.cost_exp);
            exp_done = true;
        };
        for (const auto j : order) {
            if (!exp_done && exp_ratio > v[j] / p.cost_obs) take_experiments();
            if (p.cost_obs <= left(s)) s.z[j] = true;
        }
        if (!exp_done) take_experiments();
        // Leftover after rounding: anything that still fits.
        s.n_e += units_within(left(s), p.cost_exp);
        fill_candidates(s);
        score(s);
        return s;
    }

    std::vector<State> neighbours(const State& s) const {
        std::vector<State> out;
        auto push = [&](State t) {
            t.n_e += units_within(left(t), p.cost_exp);
            fill_candidates(t);
            score(t);
            out.push_back(std::move(t));
        };
        // Drop t experiments and refill with candidates.
        for (int t = 1; t <= s.n_e; ++t) {
            State n = s;
            n.n_e -= t;
            fill_candidates(n);
            score(n);
            out.push_back(n);
        }
        // Drop the weakest selected candidates until one more experiment fits.
        {
            State n = s;
            for (auto it = order.rbegin(); it != order.rend() && left(n) < p.cost_exp; ++it) {
                if (n.z[*it]) n.z[*it] = false;
            }
            if (left(n) >= p.cost_exp) {
                ++n.n_e;
                push(std::move(n));
            }
        }
        // Swap the weakest selected candidate for the strongest unselected one.
        {
            auto weakest = std::find_if(order.rbegin(), order.rend(), [&](std::size_t j) { return s.z[j]; });
            auto strongest = std::find_if(order.begin(), order.end(), [&](std::size_t j) { return !s.z[j]; });
            if (weakest != order.rend() && strongest != order.end()) {
                State n = s;
                n.z[*weakest] = false;
                n.z[*strongest] = true;
                push(std::move(n));
            }
        }
        // Plain additions.
        push(s);
        return out;
    }

    State solve() const {
        State best = greedy();
        for (;;) {
            const State* better = nullptr;
            const auto moves = neighbours(best);
            for (const auto& n : moves) {
                if (n.value > (better ? better->value : best.value) * (1.0 + 1e-12) + 1e-300) better = &n;
            }
            if (!better) return best;
            best = *better;
        }
    }
};

Allocation to_allocation(const FixedNc& f, const State& s) {
    Allocation a;
    a.n_e = s.n_e;
    a.n_c = f.n_c;
    a.z = s.z;
    a.objective = precision_objective(a, f.p);
    return a;
}

Allocation empty_allocation(const AllocationProblem& p) {
    Allocation a;
    a.z.assign(p.sigma_o2.size(), false);
    return a;
}

}  // namespace

double precision_objective(const Allocation& a, const AllocationProblem& p) {
    if (a.n_e < 0 || a.n_c < 0) throw Error(Errc::infeasible_allocation, "negative study count");
    if (a.z.size() != p.sigma_o2.size()) {
        throw Error(Errc::infeasible_allocation,
                    std::to_string(a.z.size()) + " selection flags for " + std::to_string(p.sigma_o2.size()) + " candidates");
    }
    if (a.cost(p) > p.budget) {
        throw Error(Errc::infeasible_allocation, "cost " + std::to_string(a.cost(p)) + " exceeds budget " + std::to_string(p.budget));
    }
    double total = a.n_e / p.sigma_e2;
    if (std::find(a.z.begin(), a.z.end(), true) == a.z.end()) return total;
    const double g = gamma2_at(p, a.n_c);
    for (std::size_t j = 0; j < a.z.size(); ++j) {
        if (a.z[j]) total += 1.0 / (p.sigma_o2[j] + g);
    }
    return total;
}

Allocation solve_greedy(const AllocationProblem& p) {
    p.validate();
    Allocation best = empty_allocation(p);
    for (int nc = 0; nc <= p.nc_max && nc * p.cost_cal <= p.budget; ++nc) {
        const FixedNc f(p, nc);
        auto a = to_allocation(f, f.solve());
        if (a.objective > best.objective) best = std::move(a);
    }
    return best;
}

Allocation solve_bruteforce(const AllocationProblem& p) {
    p.validate();
    const auto n = p.sigma_o2.size();
    const double nodes = (p.nc_max + 1.0) * std::ldexp(1.0, static_cast<int>(n));
    if (n >= 63 || nodes > 1e7) {
        throw Error(Errc::search_space_too_large, std::to_string(n) + " candidates and nc_max = " + std::to_string(p.nc_max));
    }
    Allocation best = empty_allocation(p);
    for (int nc = 0; nc <= p.nc_max && nc * p.cost_cal <= p.budget; ++nc) {
        const FixedNc f(p, nc);
        State s;
        s.z.resize(n);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            for (std::size_t j = 0; j < n; ++j) s.z[j] = (mask >> j) & 1u;
            s.n_e = 0;
            if (f.left(s) < 0.0) continue;
            s.n_e = units_within(f.left(s), p.cost_exp);
            f.score(s);
            if (s.value > best.objective) best = to_allocation(f, s);
        }
    }
    return best;
}

std::string allocation_json(const Allocation& a, const AllocationProblem& p) {
    nlohmann::ordered_json j;
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < a.z.size(); ++k) {
        if (a.z[k]) chosen.push_back(k + 1);
    }
    j["n_e"] = a.n_e;
    j["n_o"] = chosen.size();
    j["n_c"] = a.n_c;
    j["observational"] = chosen;
    j["objective"] = a.objective;
    j["cost"] = a.cost(p);
    j["budget"] = p.budget;
    j["gamma2"] = chosen.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p.gamma2_of_nc(a.n_c));
    return j.dump();
}

}  // namespace ceb::alloc
