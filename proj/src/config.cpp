#include "ceb/config.hpp"

#include "ceb/io.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string>

namespace ceb::config {

namespace pt = boost::property_tree;

namespace {

pt::ptree parse(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(Errc::parse_error, "line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty()) throw Error(Errc::parse_error, "key '" + name + "' outside a section");
        if (name != "simulation" && name != "dgp") throw Error(Errc::parse_error, "unknown section [" + name + "]");
    }
    return tree;
}

// Reads one section and makes sure every key in it is consumed.
class Section {
public:
    Section(const pt::ptree& tree, const std::string& name) : name_(name) {
        const auto child = tree.get_child_optional(name);
        if (!child) throw Error(Errc::parse_error, "missing [" + name + "] section");
        for (const auto& [key, value] : *child) values_[key] = boost::algorithm::trim_copy(value.data());
    }

    void finish() const {
        for (const auto& [key, _] : values_) {
            if (!used_.contains(key)) throw Error(Errc::parse_error, "unknown key '" + key + "' in [" + name_ + "]");
        }
    }

    void real(const char* key, double& out) {
        if (auto v = take(key)) out = io::parse_double(*v, 0);
    }

    template <typename Int>
    void integer(const char* key, Int& out) {
        if (auto v = take(key)) out = to_int<Int>(key, *v);
    }

    template <typename T, typename F>
    void list(const char* key, std::vector<T>& out, F convert) {
        auto v = take(key);
        if (!v) return;
        std::string s = *v;
        if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
        out.clear();
        for (auto& item : io::split_csv_line(s)) {
            boost::algorithm::trim(item);
            if (item.empty()) throw Error(Errc::parse_error, "empty list entry for '" + std::string(key) + "'");
            out.push_back(convert(item));
        }
    }

    std::optional<std::string> take(const char* key) {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    template <typename Int>
    Int to_int(const std::string& key, const std::string& text) const {
        Int value{};
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw Error(Errc::parse_error, "[" + name_ + "] " + key + ": '" + text + "' is not an integer");
        }
        return value;
    }

private:
    std::string name_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

sim::SimConfig sim_from(const pt::ptree& tree) {
    Section s(tree, "simulation");
    sim::SimConfig cfg;
    s.real("theta_star", cfg.theta_star);
    s.real("mu_star", cfg.mu_star);
    s.real("gamma2_star", cfg.gamma2_star);
    s.real("sigma_e", cfg.sigma_e);
    s.real("sigma_o", cfg.sigma_o);
    s.real("sigma_c", cfg.sigma_c);
    s.integer("replicates", cfg.replicates);
    s.integer("seed", cfg.seed);
    s.list("J_grid", cfg.J_grid, [&](const std::string& t) { return s.to_int<int>("J_grid", t); });
    s.list("arms", cfg.arms, [](const std::string& t) { return sim::parse_arm(t); });
    if (auto v = s.take("eb0_split")) cfg.eb0_split = parse_split_mode(*v);
    s.finish();
    cfg.validate();
    return cfg;
}

semisynth::DgpConfig dgp_from(const pt::ptree& tree) {
    Section s(tree, "dgp");
    semisynth::DgpConfig cfg;
    s.integer("n_units", cfg.n_units);
    s.real("alpha", cfg.alpha);
    s.real("beta", cfg.beta);
    std::vector<double> delta;
    s.list("delta", delta, [](const std::string& t) { return io::parse_double(t, 0); });
    if (!delta.empty()) cfg.delta = Eigen::Map<const Eigen::VectorXd>(delta.data(), static_cast<Eigen::Index>(delta.size()));
    s.real("noise_sd", cfg.noise_sd);
    s.real("propensity_beta", cfg.propensity_beta);
    s.integer("n_parts", cfg.n_parts);
    s.real("treated_fraction", cfg.treated_fraction);
    s.integer("seed", cfg.seed);
    s.finish();
    cfg.validate();
    return cfg;
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    return in;
}

}  // namespace

sim::SimConfig read_sim_config(std::istream& in) { return sim_from(parse(in)); }

sim::SimConfig read_sim_config(const std::filesystem::path& path) {
    auto in = open(path);
    return read_sim_config(in);
}

semisynth::DgpConfig read_dgp_config(std::istream& in) { return dgp_from(parse(in)); }

semisynth::DgpConfig read_dgp_config(const std::filesystem::path& path) {
    auto in = open(path);
    return read_dgp_config(in);
}

}  // namespace ceb::config
