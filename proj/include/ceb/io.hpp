#pragma once

// Study CSV (`id,kind,estimate,variance`) and posterior JSON.

#include "ceb/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ceb::io {

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

// Strict parse of a finite decimal; throws parse_error on junk, NaN or Inf.
double parse_double(std::string_view text, std::size_t line = 0);

std::vector<std::string> split_csv_line(std::string_view line);

StudyCollection read_studies_csv(std::istream& in);
StudyCollection read_studies_csv(const std::filesystem::path& path);

void write_studies_csv(const StudyCollection& c, std::ostream& out);
void write_studies_csv(const StudyCollection& c, const std::filesystem::path& path);

std::string posterior_json(const GaussianPosterior& p);
void write_posterior_json(const GaussianPosterior& p, const std::filesystem::path& path);
GaussianPosterior read_posterior_json(const std::filesystem::path& path);

std::ofstream open_output(const std::filesystem::path& path);

}  // namespace ceb::io
