#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace bilab::lab {

inline constexpr const char* version = "0.1.0";

enum class Kind { apply, wavelet, levelsplit, thm12, thm13, sharpness, scaling, rough, fefferman, spherical };

const std::vector<Kind>& all_kinds();
std::string to_string(Kind k);
Kind parse_kind(const std::string& s);
// kinds that draw random inputs or signs and therefore need a seed
bool is_randomized(Kind k);

// Sweep bounds with lo > hi mean an empty sweep.
struct ExperimentConfig {
    Kind kind = Kind::apply;
    std::optional<std::uint64_t> seed;
    int threads = 1;

    int n = 1;
    int sweep_lo = 0;     // N (thm12), D (thm13), N range (sharpness)
    int sweep_hi = -1;
    int points = 13;      // samples of a log-spaced sweep
    int lambda_max = 5;
    int k_lo = 0;
    int k_hi = -1;
    double q = 2.0;
    double r = 2.0;
    double eps = 0.5;
    int moments = 2;
    int smoothness = 0;
    int trials = 0;
    int pairs = 20;
    int lattice_radius = 8;
    double period = 8.0;
    double mesh = 1.0 / 64;

    std::string multiplier = "one";
    std::string symbol = "quadrupole";
    std::string radial = "log_square";

    std::string out_dir = "out";
    std::string report = "report.json";

    // overrides of the built-in tolerances, by record name
    std::map<std::string, double> tolerances;

    double tolerance(const std::string& name, double fallback) const;
    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig default_config(Kind k);

// INI text: [experiment] [params] [catalogue] [output] [tolerance]
boost::property_tree::ptree to_ptree(const ExperimentConfig& c);
ExperimentConfig from_ptree(const boost::property_tree::ptree& t);
std::string serialize(const ExperimentConfig& c);
ExperimentConfig parse_config(const std::string& text);
boost::property_tree::ptree read_ini_file(const std::string& path);
// "section.key" = value
void set_option(boost::property_tree::ptree& t, const std::string& key, const std::string& value);

// every violation, empty when the config is admissible
std::vector<std::string> validate(const ExperimentConfig& c);
// throws Errc::resource when the requested sizes are out of reach
void check_resources(const ExperimentConfig& c);

struct Record {
    std::string name;
    double value = 0.0;
    std::optional<double> predicted;
    std::optional<double> ratio;
    double tolerance = 0.0;
    std::string criterion;   // what pass means, e.g. "value <= 1e-10"
    bool pass = true;
};

struct Series {
    std::string quantity;
    std::string parameter;
    std::string parameter_unit;
    std::string value_unit;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> predicted;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<Record> records;
    std::vector<Series> series;
    std::string version;
    std::string timestamp;

    bool pass() const;
    const Series& find_series(const std::string& quantity) const;
};

RunReport run(const ExperimentConfig& c);

std::string report_json(const RunReport& rep);
// '#' provenance lines, a header row with units, then (parameter, value, predicted) rows
void export_plot_data(const RunReport& rep, const std::string& quantity, std::ostream& os);
// report document plus one data file per series; returns the written paths
std::vector<std::string> write_outputs(const RunReport& rep);

std::string sha256_hex(const std::string& bytes);
// shortest text that reads back to the same double
std::string format_double(double v);

} // namespace bilab::lab
