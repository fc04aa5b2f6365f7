#include "ceb/io.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace ceb::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string where(std::size_t line) { return line ? "line " + std::to_string(line) + ": " : std::string{}; }

}  // namespace

std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw Error(Errc::invalid_argument, "cannot format number");
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text, std::size_t line) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(Errc::parse_error, where(line) + "not a number '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        throw Error(Errc::parse_error, where(line) + "non-finite value '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

StudyCollection read_studies_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<StudySummary> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (!have_header) {
            if (fields != std::vector<std::string>{"id", "kind", "estimate", "variance"}) {
                throw Error(Errc::parse_error, where(lineno) + "expected header id,kind,estimate,variance");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 4) {
            throw Error(Errc::parse_error, where(lineno) + "expected 4 fields, got " + std::to_string(fields.size()));
        }
        StudySummary s;
        s.id = fields[0];
        try {
            s.kind = parse_study_kind(fields[1]);
        } catch (const Error&) {
            throw Error(Errc::parse_error, where(lineno) + "unknown kind '" + fields[1] + "'");
        }
        s.estimate = parse_double(fields[2], lineno);
        s.variance = parse_double(fields[3], lineno);
        if (!(s.variance > 0.0)) throw Error(Errc::non_positive_variance, where(lineno) + s.id);
        rows.push_back(std::move(s));
    }
    if (!have_header) throw Error(Errc::parse_error, "empty study file");
    return StudyCollection::from_studies(rows);
}

StudyCollection read_studies_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    return read_studies_csv(in);
}

void write_studies_csv(const StudyCollection& c, std::ostream& out) {
    out << "id,kind,estimate,variance\n";
    for (const auto& s : c.to_studies()) {
        out << s.id << ',' << to_string(s.kind) << ',' << format_double(s.estimate) << ','
            << format_double(s.variance) << '\n';
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    return out;
}

void write_studies_csv(const StudyCollection& c, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_studies_csv(c, out);
}

std::string posterior_json(const GaussianPosterior& p) {
    return nlohmann::json{{"mean", p.mean}, {"variance", p.variance}}.dump();
}

void write_posterior_json(const GaussianPosterior& p, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << posterior_json(p) << '\n';
}

GaussianPosterior read_posterior_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        return {j.at("mean").get<double>(), j.at("variance").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
}

}  // namespace ceb::io
