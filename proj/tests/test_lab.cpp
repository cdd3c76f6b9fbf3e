#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>

#include "bilab/error.hpp"
#include "bilab/lab.hpp"

using namespace bilab;
using namespace bilab::lab;

namespace {

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::string csv(const RunReport& rep, const std::string& q)
{
    std::ostringstream os;
    export_plot_data(rep, q, os);
    return os.str();
}

Errc error_code(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::invalid_argument;
}

} // namespace

TEST_CASE("config round trip")
{
    for (Kind k : all_kinds()) {
        ExperimentConfig c = default_config(k);
        CHECK(parse_config(serialize(c)) == c);
        c.seed = 18446744073709551615ull;
        c.q = 1.0 / 3.0;
        c.mesh = 0.1;
        c.eps = 2.5e-7;
        c.tolerances["decay_exponent"] = 0.125;
        c.symbol = "rough_power";
        CHECK(parse_config(serialize(c)) == c);
    }
    for (double v : {0.1, 1.0 / 3, 1e-300, 123456789.125, -0.0}) {
        double back = 0;
        std::istringstream(format_double(v)) >> back;
        CHECK(back == v);
    }
}

TEST_CASE("later sources override earlier ones")
{
    const std::string text = "[experiment]\nkind=scaling\n[params]\nq=3\nlambda_max=2\n";
    std::istringstream is(text);
    boost::property_tree::ptree t;
    boost::property_tree::read_ini(is, t);
    CHECK(from_ptree(t).q == 3.0);
    CHECK(from_ptree(t).lambda_max == 2);
    CHECK(from_ptree(t).n == default_config(Kind::scaling).n);
    set_option(t, "params.q", "2.5");
    CHECK(from_ptree(t).q == 2.5);
    CHECK_THROWS_AS(set_option(t, "q", "1"), Error);
}

TEST_CASE("schema errors")
{
    CHECK(error_code([] { parse_config("[params]\nq=2\n"); }) == Errc::schema);
    CHECK(error_code([] { parse_config("[experiment]\nkind=nonsense\n"); }) == Errc::schema);

    // every problem is listed, not just the first
    try {
        parse_config("[experiment]\nkind=thm12\nseed=-4\n[params]\nbogus=1\nq=abc\n[extra]\nx=1\n");
        FAIL("expected a schema error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("experiment.seed") != std::string::npos);
        CHECK(msg.find("params.bogus") != std::string::npos);
        CHECK(msg.find("params.q") != std::string::npos);
        CHECK(msg.find("[extra]") != std::string::npos);
    }

    // randomized kinds need a seed
    ExperimentConfig c = default_config(Kind::thm12);
    auto problems = validate(c);
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("seed") != std::string::npos);
    CHECK(error_code([&] { run(c); }) == Errc::schema);
    c.seed = 1;
    CHECK(validate(c).empty());
    CHECK(validate(default_config(Kind::sharpness)).empty());

    ExperimentConfig bad = default_config(Kind::rough);
    bad.r = 3;
    bad.mesh = 0.5;
    bad.symbol = "nope";
    CHECK(validate(bad).size() == 3);

    // size limits are reported before any work
    ExperimentConfig big = default_config(Kind::apply);
    big.seed = 1;
    big.lattice_radius = 400;
    CHECK(error_code([&] { run(big); }) == Errc::resource);
}

TEST_CASE("apply with the unit multiplier reproduces the product")
{
    ExperimentConfig c = default_config(Kind::apply);
    c.seed = 5;
    c.trials = 4;
    auto rep = run(c);
    CHECK(rep.pass());
    bool seen = false;
    for (const auto& r : rep.records)
        if (r.name == "product_identity_error") {
            seen = true;
            CHECK(r.pass);
            CHECK(r.value <= 1e-12);
        }
    CHECK(seen);
    CHECK(rep.find_series("oracle_error").x.size() == 4);
}

TEST_CASE("thm12 sweep report and export")
{
    ExperimentConfig c = default_config(Kind::thm12);
    c.seed = 9;
    auto rep = run(c);
    CHECK(rep.pass());
    REQUIRE(rep.records.size() == 1);
    CHECK(rep.records[0].name == "kappa_dispersion");

    auto ls = lines(csv(rep, "khintchine_l1"));
    // six provenance lines, a header, one row per N
    REQUIRE(ls.size() == 6 + 1 + 7);
    for (int i = 0; i < 6; ++i) CHECK(ls[static_cast<std::size_t>(i)].rfind("# ", 0) == 0);
    CHECK(ls[6] == "N [block index],khintchine_l1 [L1 norm],predicted [L1 norm]");
    CHECK(ls[7].rfind("4,", 0) == 0);
    CHECK(ls[13].rfind("10,", 0) == 0);
    for (std::size_t i = 7; i < ls.size(); ++i) CHECK(std::count(ls[i].begin(), ls[i].end(), ',') == 2);

    CHECK_THROWS_AS(csv(rep, "no_such_quantity"), Error);

    const std::string json = report_json(rep);
    CHECK(json.find("\"records\"") != std::string::npos);
    CHECK(json.find("\"timestamp\"") != std::string::npos);
    CHECK(json.find("\"seed\": 9") != std::string::npos);
}

TEST_CASE("empty sweep gives a header-only file")
{
    ExperimentConfig c = default_config(Kind::thm12);
    c.seed = 1;
    c.sweep_lo = 5;
    c.sweep_hi = 4;
    auto rep = run(c);
    CHECK(rep.records.empty());
    auto ls = lines(csv(rep, "khintchine_l1"));
    CHECK(ls.size() == 7);
    CHECK(ls.back() == "N [block index],khintchine_l1 [L1 norm],predicted [L1 norm]");
}

TEST_CASE("wavelet export carries the reference slope")
{
    ExperimentConfig c = default_config(Kind::wavelet);
    c.lambda_max = 3;
    auto rep = run(c);
    const auto& s = rep.find_series("scale_maxima");
    REQUIRE(s.x.size() == 4);
    for (std::size_t i = 1; i < s.x.size(); ++i)
        CHECK(s.predicted[i] - s.predicted[i - 1] == doctest::Approx(-(c.moments + 1 + c.n)));
}

TEST_CASE("identical config and seed give identical data files")
{
    ExperimentConfig c = default_config(Kind::spherical);
    c.seed = 77;
    c.pairs = 2;
    c.trials = 20;
    c.lattice_radius = 4;
    auto a = run(c);
    c.threads = 2;
    auto b = run(c);
    c.threads = 1;
    auto d = run(c);
    // the thread count is part of the config echo, so compare data rows only
    auto rows = [](const std::string& text) {
        auto ls = lines(text);
        return std::vector<std::string>(ls.begin() + 6, ls.end());
    };
    for (const auto& s : a.series) {
        CHECK(csv(a, s.quantity) == csv(d, s.quantity));
        CHECK(rows(csv(a, s.quantity)) == rows(csv(b, s.quantity)));
    }
    c.seed = 78;
    auto e = run(c);
    CHECK(csv(a, "domination_margin") != csv(e, "domination_margin"));
}

TEST_CASE("sha256 test vectors")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
