#include "ceb/simharness.hpp"

#include "ceb/io.hpp"
#include "ceb/posterior.hpp"
#include "ceb/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace ceb::sim {

std::string_view to_string(Arm a) noexcept {
    switch (a) {
        case Arm::naive: return "naive";
        case Arm::eb0: return "eb0";
        case Arm::eb_illusion: return "eb_illusion";
        case Arm::ceb_mm: return "ceb_mm";
        case Arm::ceb_mle: return "ceb_mle";
        case Arm::oracle: return "oracle";
    }
    return "unknown";
}

std::vector<Arm> all_arms() { return {Arm::naive, Arm::eb0, Arm::eb_illusion, Arm::ceb_mm, Arm::ceb_mle, Arm::oracle}; }

Arm parse_arm(std::string_view text) {
    for (const auto a : all_arms()) {
        if (to_string(a) == text) return a;
    }
    throw Error(Errc::invalid_argument, "unknown arm '" + std::string(text) + "'");
}

void SimConfig::validate() const {
    for (const double v : {theta_star, mu_star, gamma2_star, sigma_e, sigma_o, sigma_c}) {
        if (!std::isfinite(v)) throw Error(Errc::non_finite_value, "simulation parameters");
    }
    if (!(sigma_e > 0.0 && sigma_o > 0.0 && sigma_c > 0.0)) throw Error(Errc::invalid_argument, "standard deviations must be > 0");
    if (gamma2_star < 0.0) throw Error(Errc::invalid_argument, "gamma2_star must be >= 0");
    if (replicates < 1) throw Error(Errc::invalid_argument, "replicates must be >= 1");
    if (J_grid.empty()) throw Error(Errc::invalid_argument, "J_grid is empty");
    for (std::size_t i = 0; i < J_grid.size(); ++i) {
        if (J_grid[i] < 0) throw Error(Errc::invalid_argument, "J_grid entries must be >= 0");
        if (i > 0 && J_grid[i] <= J_grid[i - 1]) throw Error(Errc::invalid_argument, "J_grid must be strictly ascending");
    }
    if (arms.empty()) throw Error(Errc::invalid_argument, "no arms selected");
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (std::find(arms.begin(), arms.begin() + static_cast<std::ptrdiff_t>(i), arms[i]) != arms.begin() + static_cast<std::ptrdiff_t>(i)) {
            throw Error(Errc::invalid_argument, "arm '" + std::string(to_string(arms[i])) + "' listed twice");
        }
    }
}

const SimRow& SimResult::at(Arm arm, int J) const {
    for (const auto& r : rows) {
        if (r.arm == arm && r.J == J) return r;
    }
    throw Error(Errc::invalid_argument, "no row for arm " + std::string(to_string(arm)) + " at J = " + std::to_string(J));
}

std::vector<const SimRow*> SimResult::series(Arm arm) const {
    std::vector<const SimRow*> out;
    for (const auto& r : rows) {
        if (r.arm == arm) out.push_back(&r);
    }
    return out;
}

StudyCollection generate_collection(const SimConfig& cfg, int J, int K, std::uint64_t replicate_index) {
    auto rng = child_rng(cfg.seed, {static_cast<std::uint64_t>(J), replicate_index});
    std::normal_distribution<double> z(0.0, 1.0);
    const double g = std::sqrt(cfg.gamma2_star);
    StudyCollection c;
    c.experimental = StudySummary{"e", StudyKind::experimental, cfg.theta_star + cfg.sigma_e * z(rng), cfg.sigma_e * cfg.sigma_e};
    c.observational.reserve(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        const double b = cfg.mu_star + g * z(rng);
        c.observational.push_back({"o" + std::to_string(j + 1), StudyKind::observational,
                                   cfg.theta_star + b + cfg.sigma_o * z(rng), cfg.sigma_o * cfg.sigma_o});
    }
    c.calibration.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const double b = cfg.mu_star + g * z(rng);
        c.calibration.push_back({"c" + std::to_string(k + 1), StudyKind::calibration, b + cfg.sigma_c * z(rng),
                                 cfg.sigma_c * cfg.sigma_c});
    }
    return c;
}

double arm_estimate(Arm arm, const StudyCollection& c, const SimConfig& cfg) {
    switch (arm) {
        case Arm::naive: return c.exp().estimate;
        case Arm::eb0: {
            RegimeOptions opts;
            opts.split = cfg.eb0_split;
            return run_regime(Model::eb0, c, opts).posterior.mean;
        }
        case Arm::eb_illusion: return fit_mle_illusion(c).posterior.mean;
        case Arm::ceb_mm: return posterior_ceb(c, fit_mm_calibration(c.calibration).prior).mean;
        case Arm::ceb_mle: return posterior_ceb(c, fit_mle_calibration(c.calibration).prior).mean;
        case Arm::oracle: return posterior_given_prior(c, {cfg.mu_star, cfg.gamma2_star}).mean;
    }
    throw Error(Errc::invalid_argument, "unknown arm");
}

namespace {

constexpr double kFailed = std::numeric_limits<double>::quiet_NaN();

SimRow summarize(Arm arm, int J, const std::vector<double>& sq) {
    SimRow row;
    row.arm = arm;
    row.J = J;
    double total = 0.0;
    long n = 0;
    for (const double s : sq) {
        if (std::isnan(s)) {
            ++row.failures;
            continue;
        }
        total += s;
        ++n;
    }
    if (n == 0) {
        row.mse = row.mc_se = kFailed;
        return row;
    }
    row.mse = total / static_cast<double>(n);
    double ss = 0.0;
    for (const double s : sq) {
        if (!std::isnan(s)) ss += (s - row.mse) * (s - row.mse);
    }
    row.mc_se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return row;
}

}  // namespace

SimResult run_sweep(const SimConfig& cfg, int threads) {
    cfg.validate();
    if (threads < 1) throw Error(Errc::invalid_argument, "threads must be >= 1");

    auto arms = cfg.arms;
    const bool naive_listed = std::find(arms.begin(), arms.end(), Arm::naive) != arms.end();
    if (!naive_listed) arms.push_back(Arm::naive);
    const auto n_arms = arms.size();
    const auto reps = static_cast<std::size_t>(cfg.replicates);
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), reps);

    SimResult result;
    for (const int J : cfg.J_grid) {
        // sq[a][r]: squared error of arm a at replicate r, NaN when the fit raised.
        std::vector<std::vector<double>> sq(n_arms, std::vector<double>(reps));
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                const auto c = generate_collection(cfg, J, J, r);
                for (std::size_t a = 0; a < n_arms; ++a) {
                    try {
                        const double err = arm_estimate(arms[a], c, cfg) - cfg.theta_star;
                        sq[a][r] = err * err;
                    } catch (const Error&) {
                        sq[a][r] = kFailed;
                    }
                }
            }
        };
        if (workers <= 1) {
            work(0, reps);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, reps * w / workers, reps * (w + 1) / workers);
        }

        std::vector<SimRow> rows;
        for (std::size_t a = 0; a < n_arms; ++a) rows.push_back(summarize(arms[a], J, sq[a]));
        const double naive_mse = std::find_if(rows.begin(), rows.end(), [](const SimRow& r) { return r.arm == Arm::naive; })->mse;
        for (auto& r : rows) r.re = r.mse / naive_mse;
        if (!naive_listed) rows.pop_back();
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    return result;
}

double loglog_slope(const std::vector<double>& J, const std::vector<double>& mse) {
    if (J.size() != mse.size()) throw Error(Errc::length_mismatch, "J and mse lengths differ");
    if (J.size() < 3) throw Error(Errc::degenerate_grid, "slope needs at least 3 grid points, got " + std::to_string(J.size()));
    const auto n = static_cast<Eigen::Index>(J.size());
    Eigen::ArrayXd x(n);
    Eigen::ArrayXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!(J[k] > 0.0) || !(mse[k] > 0.0)) throw Error(Errc::degenerate_grid, "J and mse must be positive");
        x[i] = std::log(J[k]);
        y[i] = std::log(mse[k]);
    }
    const Eigen::ArrayXd dx = x - x.mean();
    const double sxx = dx.square().sum();
    if (!(sxx > 0.0)) throw Error(Errc::degenerate_grid, "all J values are equal");
    return (dx * (y - y.mean())).sum() / sxx;
}

double loglog_slope(const SimResult& result, Arm arm) {
    std::vector<double> J;
    std::vector<double> mse;
    for (const auto* r : result.series(arm)) {
        J.push_back(r->J);
        mse.push_back(r->mse);
    }
    return loglog_slope(J, mse);
}

void write_result_csv(const SimResult& r, std::ostream& out) {
    out << "arm,J,mse,mc_se,re\n";
    for (const auto& row : r.rows) {
        out << to_string(row.arm) << ',' << row.J << ',' << io::format_double(row.mse) << ','
            << io::format_double(row.mc_se) << ',' << io::format_double(row.re) << '\n';
    }
}

std::string result_csv(const SimResult& r) {
    std::ostringstream out;
    write_result_csv(r, out);
    return out.str();
}

}  // namespace ceb::sim
