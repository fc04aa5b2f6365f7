#include "ceb/cli.hpp"

#include "ceb/alloc.hpp"
#include "ceb/config.hpp"
#include "ceb/io.hpp"
#include "ceb/semisynth.hpp"
#include "ceb/simharness.hpp"
#include "ceb/withinstudy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace ceb::cli {

namespace {

using nlohmann::ordered_json;

struct Globals {
    std::uint64_t seed = kDefaultSeed;
    bool seed_given = false;
    int threads = 1;
    std::string out;
    std::string format = "json";
    bool format_given = false;
};

// Sends results to --out when given, otherwise to the caller's stream.
void emit(const Globals& g, std::ostream& out, const std::string& text) {
    if (g.out.empty()) {
        out << text;
        return;
    }
    auto file = io::open_output(g.out);
    file << text;
}

std::string fixed(double x, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << x;
    return s.str();
}

std::string posterior_text(const GaussianPosterior& p, const std::string& label, const std::string& format) {
    if (format == "csv") {
        return "mean,variance,lower95,upper95\n" + io::format_double(p.mean) + ',' + io::format_double(p.variance) + ',' +
               io::format_double(p.lower95()) + ',' + io::format_double(p.upper95()) + '\n';
    }
    if (format == "table") {
        std::ostringstream s;
        s << std::left << std::setw(8) << "model" << std::right << std::setw(12) << "mean" << std::setw(12) << "sd"
          << "   95% interval\n";
        s << std::left << std::setw(8) << label << std::right << std::setw(12) << fixed(p.mean) << std::setw(12)
          << fixed(p.sd()) << "   [" << fixed(p.lower95()) << ", " << fixed(p.upper95()) << "]\n";
        return s.str();
    }
    return io::posterior_json(p) + '\n';
}

std::string fit_text(const FitReport& r, const std::string& format) {
    if (format == "csv") {
        return "mu,gamma2,method,objective,bound_hit,iterations,bound\n" + io::format_double(r.prior.mu) + ',' +
               io::format_double(r.prior.gamma2) + ',' + std::string(to_string(r.method)) + ',' +
               io::format_double(r.objective_value) + ',' + (r.bound_hit ? "true" : "false") + ',' +
               std::to_string(r.iterations) + ',' + io::format_double(r.bound) + '\n';
    }
    if (format == "table") {
        std::ostringstream s;
        s << "method     " << to_string(r.method) << "\nmu         " << fixed(r.prior.mu, 6) << "\ngamma2     "
          << fixed(r.prior.gamma2, 6) << "\nobjective  " << fixed(r.objective_value, 6) << "\nbound_hit  "
          << (r.bound_hit ? "yes" : "no") << '\n';
        return s.str();
    }
    return fit_report_json(r) + '\n';
}

std::string study_text(const StudySummary& s, const std::string& format) {
    if (format == "json") {
        ordered_json j;
        j["id"] = s.id;
        j["kind"] = std::string(to_string(s.kind));
        j["estimate"] = s.estimate;
        j["variance"] = s.variance;
        return j.dump() + '\n';
    }
    if (format == "table") {
        const GaussianPosterior p{s.estimate, s.variance};
        std::ostringstream o;
        o << s.id << " (" << to_string(s.kind) << ")  estimate " << fixed(s.estimate) << "  se " << fixed(p.sd())
          << "  95% [" << fixed(p.lower95()) << ", " << fixed(p.upper95()) << "]\n";
        return o.str();
    }
    StudyCollection c;
    if (s.kind == StudyKind::experimental) {
        c.experimental = s;
    } else if (s.kind == StudyKind::observational) {
        c.observational.push_back(s);
    } else {
        c.calibration.push_back(s);
    }
    std::ostringstream o;
    io::write_studies_csv(c, o);
    return o.str();
}

std::string sim_text(const sim::SimResult& r, const std::string& format) {
    if (format == "json") {
        ordered_json rows = ordered_json::array();
        for (const auto& row : r.rows) {
            rows.push_back({{"arm", std::string(to_string(row.arm))},
                            {"J", row.J},
                            {"mse", row.mse},
                            {"mc_se", row.mc_se},
                            {"re", row.re},
                            {"failures", row.failures}});
        }
        return rows.dump(1) + '\n';
    }
    if (format == "table") {
        std::ostringstream s;
        s << std::left << std::setw(12) << "arm" << std::right << std::setw(6) << "J" << std::setw(12) << "mse"
          << std::setw(12) << "mc_se" << std::setw(10) << "re" << '\n';
        for (const auto& row : r.rows) {
            s << std::left << std::setw(12) << to_string(row.arm) << std::right << std::setw(6) << row.J << std::setw(12)
              << fixed(row.mse, 5) << std::setw(12) << fixed(row.mc_se, 5) << std::setw(10) << fixed(row.re, 4) << '\n';
        }
        return s.str();
    }
    return sim::result_csv(r);
}

std::vector<double> read_variance_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        for (const auto& field : io::split_csv_line(line)) out.push_back(io::parse_double(field, lineno));
    }
    return out;
}

std::string part_name(const char* prefix, std::size_t j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03zu.csv", prefix, j);
    return buf;
}

const std::vector<std::string> kFormats{"json", "csv", "table"};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal effect estimation from one experiment plus observational and calibration studies"};
    app.name("ceb");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "RNG seed (default " + std::to_string(kDefaultSeed) + ")")
        ->each([&](const std::string&) { g.seed_given = true; });
    app.add_option("--threads", g.threads, "Worker threads for simulate")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file (directory for semisynth)");
    app.add_option("--format", g.format, "Output format (simulate defaults to csv)")->check(CLI::IsMember(kFormats))
        ->each([&](const std::string&) { g.format_given = true; });

    const std::vector<std::string> methods{"mle", "mm", "sure"};

    // fit-prior
    auto* fit = app.add_subcommand("fit-prior", "Fit the bias prior on calibration studies");
    std::string fit_file;
    std::string fit_method = "mle";
    std::optional<double> fit_bound;
    std::string sure_form = "stein";
    fit->add_option("--calibration", fit_file, "Study CSV; calibration rows are used")->required();
    fit->add_option("--method", fit_method)->check(CLI::IsMember(methods));
    fit->add_option("--bound", fit_bound, "Upper end of the gamma2 search")->check(CLI::PositiveNumber);
    fit->add_option("--sure-form", sure_form)->check(CLI::IsMember({"stein", "squared-denominator"}));

    // posterior
    auto* post = app.add_subcommand("posterior", "Posterior of the effect under one prior regime");
    std::string post_file;
    std::string post_model;
    std::optional<std::string> post_method;
    std::string post_split = "half";
    std::optional<double> post_bound;
    post->add_option("--studies", post_file, "Study CSV")->required();
    post->add_option("--model", post_model)->required()->check(CLI::IsMember({"flat", "eb0", "eb", "ceb"}));
    post->add_option("--method", post_method, "Fit method (default: mle for eb0/eb, mm for ceb)")
        ->check(CLI::IsMember(methods));
    post->add_option("--split", post_split, "Observational split for eb0")->check(CLI::IsMember({"half", "even-odd", "none"}));
    post->add_option("--bound", post_bound)->check(CLI::PositiveNumber);

    // estimate
    auto* est = app.add_subcommand("estimate", "Study summary from a unit CSV");
    std::string est_file;
    std::string est_estimator = "dim";
    int est_m = 1;
    int est_reps = 200;
    std::optional<double> est_beta;
    std::optional<double> est_const;
    std::string est_id = "study";
    std::string est_kind = "observational";
    est->add_option("--units", est_file, "Unit CSV x1..xd,a,o[,w]")->required();
    est->add_option("--estimator", est_estimator)->check(CLI::IsMember({"dim", "matching", "ipw"}));
    est->add_option("--m", est_m, "Matches per treated unit")->check(CLI::PositiveNumber);
    est->add_option("--bootstrap", est_reps, "Bootstrap replicates")->check(CLI::Range(100, 1000000));
    auto* beta_opt = est->add_option("--propensity-beta", est_beta, "IPW propensity logistic(b * x1)");
    est->add_option("--propensity", est_const, "IPW constant propensity")->excludes(beta_opt);
    est->add_option("--id", est_id);
    est->add_option("--kind", est_kind)->check(CLI::IsMember({"experimental", "observational", "calibration"}));

    // simulate
    auto* simc = app.add_subcommand("simulate", "Monte Carlo risk sweep");
    std::string sim_config;
    simc->add_option("--config", sim_config, "Config file with a [simulation] section")->check(CLI::ExistingFile);

    // semisynth
    auto* semi = app.add_subcommand("semisynth", "Semi-synthetic study construction");
    std::string semi_config;
    semi->add_option("--config", semi_config, "Config file with a [dgp] section")->check(CLI::ExistingFile);

    // allocate
    auto* alloc_cmd = app.add_subcommand("allocate", "Budgeted study allocation");
    alloc::AllocationProblem prob;
    std::string sigma_file;
    double gamma0 = 1.0;
    double gamma_c = 0.0;
    std::string solver = "greedy";
    alloc_cmd->add_option("--budget", prob.budget)->required()->check(CLI::NonNegativeNumber);
    alloc_cmd->add_option("--cost-exp", prob.cost_exp)->required()->check(CLI::PositiveNumber);
    alloc_cmd->add_option("--cost-obs", prob.cost_obs)->required()->check(CLI::PositiveNumber);
    alloc_cmd->add_option("--cost-cal", prob.cost_cal)->required()->check(CLI::PositiveNumber);
    alloc_cmd->add_option("--sigma-e2", prob.sigma_e2)->required()->check(CLI::PositiveNumber);
    alloc_cmd->add_option("--sigma-o2-file", sigma_file, "Candidate observational variances")->required();
    alloc_cmd->add_option("--nc-max", prob.nc_max)->required()->check(CLI::NonNegativeNumber);
    alloc_cmd->add_option("--gamma0-2", gamma0, "gamma2(n_c) = gamma0_2 * (1 + c / max(n_c, 1))")->check(CLI::NonNegativeNumber);
    alloc_cmd->add_option("--gamma-c", gamma_c)->check(CLI::NonNegativeNumber);
    alloc_cmd->add_option("--solver", solver)->check(CLI::IsMember({"greedy", "bruteforce"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "ceb: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (fit->parsed()) {
            const auto c = io::read_studies_csv(std::filesystem::path(fit_file));
            FitReport r;
            switch (parse_fit_method(fit_method)) {
                case FitMethod::mle: r = fit_mle_calibration(c.calibration, fit_bound); break;
                case FitMethod::mm: r = fit_mm_calibration(c.calibration); break;
                case FitMethod::sure:
                    r = fit_sure(c.calibration, fit_bound,
                                 sure_form == "stein" ? SureForm::stein : SureForm::squared_denominator);
                    break;
            }
            emit(g, out, fit_text(r, g.format));
        } else if (post->parsed()) {
            const auto c = io::read_studies_csv(std::filesystem::path(post_file));
            RegimeOptions opts;
            if (post_method) opts.method = parse_fit_method(*post_method);
            opts.split = parse_split_mode(post_split);
            opts.bound = post_bound;
            const auto r = run_regime(parse_model(post_model), c, opts);
            emit(g, out, posterior_text(r.posterior, post_model, g.format));
        } else if (est->parsed()) {
            const auto d = read_units_csv(std::filesystem::path(est_file));
            const auto kind = parse_study_kind(est_kind);
            StudySummary s;
            if (est_estimator == "dim") {
                s = difference_in_means(d, est_id, kind);
            } else if (est_estimator == "matching") {
                s = matching_estimate(d, est_m, est_reps, g.seed, est_id, kind);
            } else {
                Propensity e;
                if (est_beta) {
                    const double b = *est_beta;
                    e = [b](const Eigen::VectorXd& x) { return semisynth::logistic(b * x[0]); };
                    if (d.covariate_dim() < 1) throw Error(Errc::invalid_argument, "--propensity-beta needs a covariate");
                } else {
                    const double p = est_const ? *est_const
                                               : static_cast<double>(d.n_treated()) / static_cast<double>(std::max<Eigen::Index>(d.size(), 1));
                    e = [p](const Eigen::VectorXd&) { return p; };
                }
                s = ipw_estimate(d, e, est_reps, g.seed, est_id, kind);
            }
            emit(g, out, study_text(s, g.format));
        } else if (simc->parsed()) {
            auto cfg = sim_config.empty() ? sim::SimConfig{} : config::read_sim_config(std::filesystem::path(sim_config));
            if (g.seed_given) cfg.seed = g.seed;
            const auto r = sim::run_sweep(cfg, g.threads);
            for (const auto& row : r.rows) {
                if (row.failures > 0) {
                    err << "ceb: arm " << to_string(row.arm) << " at J = " << row.J << ": " << row.failures
                        << " replicates dropped after fit errors\n";
                }
            }
            emit(g, out, sim_text(r, g.format_given ? g.format : "csv"));
        } else if (semi->parsed()) {
            if (g.out.empty()) throw CLI::RequiredError("--out (output directory)");
            auto cfg = semi_config.empty() ? semisynth::DgpConfig{} : config::read_dgp_config(std::filesystem::path(semi_config));
            if (g.seed_given) cfg.seed = g.seed;
            const auto run = semisynth::run_pipeline(cfg);
            const std::filesystem::path dir(g.out);
            std::filesystem::create_directories(dir);
            write_units_csv(run.built.experimental_data, dir / "experimental_001.csv");
            for (std::size_t j = 0; j < run.built.observational_data.size(); ++j) {
                write_units_csv(run.built.observational_data[j], dir / part_name("observational", j + 2));
                write_units_csv(run.built.calibration_data[j], dir / part_name("calibration", j + 2));
            }
            io::write_studies_csv(run.built.studies, dir / "studies.csv");
            ordered_json truth;
            truth["ate"] = run.population.ate;
            truth["bias_mean"] = run.bias_mean;
            auto f = io::open_output(dir / "truth.json");
            f << truth.dump() << '\n';
            out << truth.dump() << '\n';
        } else if (alloc_cmd->parsed()) {
            prob.sigma_o2 = read_variance_list(sigma_file);
            prob.gamma2_of_nc = alloc::default_gamma2(gamma0, gamma_c);
            const auto a = solver == "greedy" ? alloc::solve_greedy(prob) : alloc::solve_bruteforce(prob);
            emit(g, out, alloc::allocation_json(a, prob) + '\n');
        }
    } catch (const CLI::ParseError& e) {
        err << "ceb: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "ceb: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "ceb: IoError: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

}  // namespace ceb::cli
