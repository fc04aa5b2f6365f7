#include "ceb/io.hpp"

#include "gen.hpp"

#include <doctest.h>

#include <bit>
#include <filesystem>
#include <sstream>

using namespace ceb;

namespace {

Errc read_error(const std::string& text) {
    std::istringstream in(text);
    try {
        io::read_studies_csv(in);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::invalid_argument;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("ceb_test_io_" + name);
}

}  // namespace

TEST_CASE("single experimental row") {
    std::istringstream in("id,kind,estimate,variance\ns1,experimental,1.0,1.0\n");
    const auto c = io::read_studies_csv(in);
    CHECK(c.exp() == StudySummary{"s1", StudyKind::experimental, 1.0, 1.0});
    CHECK(c.J() == 0);
    CHECK(c.K() == 0);
}

TEST_CASE("two experimental rows") {
    CHECK(read_error("id,kind,estimate,variance\na,experimental,1,1\nb,experimental,2,1\n") == Errc::duplicate_experimental);
}

TEST_CASE("parse errors name the line") {
    std::istringstream in("id,kind,estimate,variance\na,experimental,1,1\nb,observational,abc,1\n");
    try {
        io::read_studies_csv(in);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse_error);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK(read_error("") == Errc::parse_error);
    CHECK(read_error("id,kind,est,variance\n") == Errc::parse_error);
    CHECK(read_error("id,kind,estimate,variance\na,experimental,1\n") == Errc::parse_error);
    CHECK(read_error("id,kind,estimate,variance\na,placebo,1,1\n") == Errc::parse_error);
    CHECK(read_error("id,kind,estimate,variance\na,experimental,nan,1\n") == Errc::parse_error);
    CHECK(read_error("id,kind,estimate,variance\na,experimental,1,inf\n") == Errc::parse_error);
    CHECK(read_error("id,kind,estimate,variance\na,experimental,1,0\n") == Errc::non_positive_variance);
}

TEST_CASE("blank lines and CRLF are tolerated") {
    std::istringstream in("id,kind,estimate,variance\r\n\r\ne,experimental,2.5,0.25\r\nc,calibration,-1,3\r\n");
    const auto c = io::read_studies_csv(in);
    CHECK(c.exp().estimate == 2.5);
    CHECK(c.calibration.at(0).estimate == -1.0);
}

TEST_CASE("three-study round trip") {
    StudyCollection c;
    c.experimental = make_study("e", StudyKind::experimental, 0.1, 0.3);
    c.observational.push_back(make_study("o", StudyKind::observational, -2.75, 1e-7));
    c.calibration.push_back(make_study("c", StudyKind::calibration, 12345.678, 9.5));
    std::stringstream buf;
    io::write_studies_csv(c, buf);
    CHECK(io::read_studies_csv(buf) == c);
}

TEST_CASE("round trip is bit exact on random collections") {
    Rng rng(2024);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 200; ++i) {
        auto c = testgen::random_collection(rng, testgen::uniform_int(rng, 0, 5), testgen::uniform_int(rng, 0, 5));
        // Arbitrary finite doubles, not just short decimals.
        const double raw = std::bit_cast<double>(bits(rng));
        if (std::isfinite(raw)) c.experimental->estimate = raw;
        std::stringstream buf;
        io::write_studies_csv(c, buf);
        const auto back = io::read_studies_csv(buf);
        REQUIRE(back == c);
        CHECK(std::bit_cast<std::uint64_t>(back.exp().estimate) == std::bit_cast<std::uint64_t>(c.exp().estimate));
    }
}

TEST_CASE("file round trip and posterior json") {
    Rng rng(5);
    const auto c = testgen::random_collection(rng, 4, 3);
    const auto path = temp_file("studies.csv");
    io::write_studies_csv(c, path);
    CHECK(io::read_studies_csv(path) == c);

    const GaussianPosterior p{-1.4, 3.16};
    CHECK(io::posterior_json(p) == R"({"mean":-1.4,"variance":3.16})");
    const auto jpath = temp_file("posterior.json");
    io::write_posterior_json(p, jpath);
    CHECK(io::read_posterior_json(jpath) == p);
    std::filesystem::remove(path);
    std::filesystem::remove(jpath);
}

TEST_CASE("missing file is an io error") {
    try {
        io::read_studies_csv(std::filesystem::path("/nonexistent/studies.csv"));
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::io_error);
    }
}

TEST_CASE("number formatting") {
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::parse_double(" +2.5 ") == 2.5);
    CHECK(io::split_csv_line("a, b ,c").size() == 3);
    CHECK(io::split_csv_line("a, b ,c")[1] == "b");
}
