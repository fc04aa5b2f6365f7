#include "ceb/withinstudy.hpp"

#include "ceb/io.hpp"
#include "ceb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace ceb {

UnitRecord UnitDataset::row(Eigen::Index i) const {
    return {covariates.row(i).transpose(), treatment[i] != 0, outcome[i], weight[i]};
}

UnitDataset UnitDataset::select(std::span<const Eigen::Index> rows) const {
    const auto n = static_cast<Eigen::Index>(rows.size());
    UnitDataset out;
    out.covariates.resize(n, covariate_dim());
    out.treatment.resize(n);
    out.outcome.resize(n);
    out.weight.resize(n);
    out.unit_id.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto i = rows[static_cast<std::size_t>(k)];
        out.covariates.row(k) = covariates.row(i);
        out.treatment[k] = treatment[i];
        out.outcome[k] = outcome[i];
        out.weight[k] = weight[i];
        out.unit_id[k] = unit_id[i];
    }
    return out;
}

UnitDataset UnitDataset::from_rows(std::span<const UnitRecord> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index dim = rows.empty() ? 0 : rows.front().covariate.size();
    UnitDataset d;
    d.covariates.resize(n, dim);
    d.treatment.resize(n);
    d.outcome.resize(n);
    d.weight.resize(n);
    d.unit_id.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (r.covariate.size() != dim) throw Error(Errc::invalid_argument, "covariate dimension differs at row " + std::to_string(i));
        d.covariates.row(i) = r.covariate.transpose();
        d.treatment[i] = r.treated ? 1 : 0;
        d.outcome[i] = r.outcome;
        d.weight[i] = r.weight;
        d.unit_id[i] = i;
    }
    d.validate();
    return d;
}

void UnitDataset::validate() const {
    const auto n = size();
    if (covariates.rows() != n || treatment.size() != n || weight.size() != n || unit_id.size() != n) {
        throw Error(Errc::invalid_argument, "unit dataset columns have different lengths");
    }
    if (((treatment != 0) && (treatment != 1)).any()) throw Error(Errc::invalid_argument, "treatment must be 0 or 1");
    if (!weight.allFinite() || (weight < 0.0).any()) throw Error(Errc::invalid_argument, "weights must be finite and >= 0");
    if (!outcome.allFinite() || !covariates.allFinite()) throw Error(Errc::non_finite_value, "unit dataset");
}

namespace {

struct ArmStats {
    double mean = 0.0;
    double variance_of_mean = 0.0;
    Eigen::Index positive = 0;
};

ArmStats arm_stats(const UnitDataset& d, int arm, bool want_variance) {
    const Eigen::ArrayXd w = (d.treatment == arm).select(d.weight, 0.0);
    ArmStats s;
    s.positive = (w > 0.0).count();
    if (s.positive == 0) {
        throw Error(Errc::one_arm_empty, arm == 1 ? "no treated units with positive weight" : "no control units with positive weight");
    }
    const double sw = w.sum();
    s.mean = (w * d.outcome).sum() / sw;
    if (want_variance) {
        if (s.positive < 2) throw Error(Errc::too_few_units, "variance needs two units per arm");
        const double sw2 = w.square().sum();
        const double s2 = (w * (d.outcome - s.mean).square()).sum() / (sw - sw2 / sw);
        s.variance_of_mean = s2 * sw2 / (sw * sw);
    }
    return s;
}

std::vector<Eigen::Index> rows_where(const UnitDataset& d, int arm) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d.treatment[i] == arm) rows.push_back(i);
    }
    return rows;
}

}  // namespace

double dim_point(const UnitDataset& d) {
    return arm_stats(d, 1, false).mean - arm_stats(d, 0, false).mean;
}

StudySummary difference_in_means(const UnitDataset& d, std::string id, StudyKind kind) {
    const auto t = arm_stats(d, 1, true);
    const auto c = arm_stats(d, 0, true);
    return {std::move(id), kind, t.mean - c.mean, t.variance_of_mean + c.variance_of_mean};
}

double matching_point(const UnitDataset& d, int m) {
    if (m < 1) throw Error(Errc::invalid_argument, "M must be >= 1");
    const auto treated = rows_where(d, 1);
    auto controls = rows_where(d, 0);
    if (treated.empty()) throw Error(Errc::one_arm_empty, "no treated units");
    if (controls.size() < static_cast<std::size_t>(m)) {
        throw Error(Errc::not_enough_controls,
                    std::to_string(controls.size()) + " controls for M = " + std::to_string(m));
    }
    const auto mm = static_cast<std::ptrdiff_t>(m);
    std::vector<double> dist(static_cast<std::size_t>(d.size()));
    double total = 0.0;
    for (const auto t : treated) {
        for (const auto c : controls) {
            dist[static_cast<std::size_t>(c)] = (d.covariates.row(c) - d.covariates.row(t)).squaredNorm();
        }
        std::partial_sort(controls.begin(), controls.begin() + mm, controls.end(), [&](Eigen::Index a, Eigen::Index b) {
            const double da = dist[static_cast<std::size_t>(a)];
            const double db = dist[static_cast<std::size_t>(b)];
            return da < db || (da == db && a < b);
        });
        double matched = 0.0;
        for (std::ptrdiff_t k = 0; k < mm; ++k) matched += d.outcome[controls[static_cast<std::size_t>(k)]];
        total += d.outcome[t] - matched / m;
    }
    return total / static_cast<double>(treated.size());
}

StudySummary matching_estimate(const UnitDataset& d, int m, int bootstrap_reps, std::uint64_t seed, std::string id,
                               StudyKind kind) {
    const double est = matching_point(d, m);
    const double var = bootstrap_variance(d, [m](const UnitDataset& x) { return matching_point(x, m); },
                                          bootstrap_reps, seed);
    return {std::move(id), kind, est, var};
}

double ipw_point(const UnitDataset& d, const Propensity& propensity) {
    if (d.size() == 0) throw Error(Errc::one_arm_empty, "empty dataset");
    double total = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double e = propensity(d.covariates.row(i).transpose());
        if (!(e > kOverlapEpsilon && e < 1.0 - kOverlapEpsilon)) {
            throw Error(Errc::propensity_out_of_bounds, "row " + std::to_string(i) + ": " + std::to_string(e));
        }
        total += d.treatment[i] ? d.outcome[i] / e : -d.outcome[i] / (1.0 - e);
    }
    return total / static_cast<double>(d.size());
}

StudySummary ipw_estimate(const UnitDataset& d, const Propensity& propensity, int bootstrap_reps, std::uint64_t seed,
                          std::string id, StudyKind kind) {
    const double est = ipw_point(d, propensity);
    const double var = bootstrap_variance(d, [&](const UnitDataset& x) { return ipw_point(x, propensity); },
                                          bootstrap_reps, seed);
    return {std::move(id), kind, est, var};
}

double bootstrap_variance(const UnitDataset& d, const Estimator& estimator, int reps, std::uint64_t seed) {
    if (reps < 100) throw Error(Errc::invalid_argument, "bootstrap needs at least 100 replicates");
    if (d.size() == 0) throw Error(Errc::too_few_units, "empty dataset");
    constexpr int kMaxAttempts = 100;
    const auto n = d.size();
    std::vector<double> draws(static_cast<std::size_t>(reps));
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (int b = 0; b < reps; ++b) {
        bool ok = false;
        for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
            auto rng = child_rng(seed, {static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(attempt)});
            std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
            for (auto& r : rows) r = pick(rng);
            try {
                draws[static_cast<std::size_t>(b)] = estimator(d.select(rows));
                ok = true;
            } catch (const Error& e) {
                if (e.code() != Errc::one_arm_empty && e.code() != Errc::not_enough_controls) throw;
            }
        }
        if (!ok) throw Error(Errc::resample_degenerate, "replicate " + std::to_string(b));
    }
    const Eigen::Map<const Eigen::ArrayXd> x(draws.data(), reps);
    return (x - x.mean()).square().sum() / (reps - 1);
}

UnitDataset read_units_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") != std::string::npos) header = io::split_csv_line(line);
    }
    if (header.empty()) throw Error(Errc::parse_error, "empty unit file");
    const bool weighted = header.back() == "w";
    const std::size_t ncols = header.size();
    if (ncols < 2 + (weighted ? 1u : 0u)) throw Error(Errc::parse_error, "unit header needs at least a,o");
    const std::size_t dim = ncols - 2 - (weighted ? 1 : 0);
    for (std::size_t k = 0; k < dim; ++k) {
        if (header[k] != "x" + std::to_string(k + 1)) {
            throw Error(Errc::parse_error, "line 1: expected column x" + std::to_string(k + 1) + ", got '" + header[k] + "'");
        }
    }
    if (header[dim] != "a" || header[dim + 1] != "o") throw Error(Errc::parse_error, "line 1: expected columns a,o");

    std::vector<UnitRecord> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != ncols) {
            throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": expected " + std::to_string(ncols) + " fields");
        }
        UnitRecord r;
        r.covariate.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < dim; ++k) r.covariate[static_cast<Eigen::Index>(k)] = io::parse_double(f[k], lineno);
        const double a = io::parse_double(f[dim], lineno);
        if (a != 0.0 && a != 1.0) throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": treatment must be 0 or 1");
        r.treated = a == 1.0;
        r.outcome = io::parse_double(f[dim + 1], lineno);
        if (weighted) {
            r.weight = io::parse_double(f[dim + 2], lineno);
            if (r.weight < 0.0) throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": negative weight");
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) {
        UnitDataset d;
        d.covariates.resize(0, static_cast<Eigen::Index>(dim));
        return d;
    }
    return UnitDataset::from_rows(rows);
}

UnitDataset read_units_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    return read_units_csv(in);
}

void write_units_csv(const UnitDataset& d, std::ostream& out) {
    const auto dim = d.covariate_dim();
    for (Eigen::Index k = 0; k < dim; ++k) out << 'x' << (k + 1) << ',';
    out << "a,o,w\n";
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        for (Eigen::Index k = 0; k < dim; ++k) out << io::format_double(d.covariates(i, k)) << ',';
        out << d.treatment[i] << ',' << io::format_double(d.outcome[i]) << ',' << io::format_double(d.weight[i]) << '\n';
    }
}

void write_units_csv(const UnitDataset& d, const std::filesystem::path& path) {
    auto out = io::open_output(path);
    write_units_csv(d, out);
}

}  // namespace ceb
