// bilab: run one experiment kind, write the report and data files.
//
// Precedence: built-in defaults < --config file < --set entries < named flags.
// Exit status: 0 all records pass, 1 some record failed, 2 config error,
// 3 resource limit, 4 any other error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bilab/error.hpp"
#include "bilab/lab.hpp"

namespace lab = bilab::lab;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string seed;
    int threads = 0;
    int lattice_radius = 0;
    double mesh = 0.0;
    std::vector<std::string> sets;
    std::string export_quantity;
    bool quiet = false;
};

int run_kind(lab::Kind kind, const Flags& fl)
{
    boost::property_tree::ptree t;
    if (!fl.config.empty()) t = lab::read_ini_file(fl.config);
    auto file_kind = t.get_optional<std::string>("experiment.kind");
    if (file_kind && *file_kind != lab::to_string(kind))
        throw bilab::Error(bilab::Errc::schema, "config file is for kind '" + *file_kind + "', not '" +
                                                    lab::to_string(kind) + "'");
    t.put("experiment.kind", lab::to_string(kind));
    for (const std::string& s : fl.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw bilab::Error(bilab::Errc::schema, "--set expects section.key=value, got '" + s + "'");
        lab::set_option(t, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!fl.out.empty()) lab::set_option(t, "output.dir", fl.out);
    if (!fl.seed.empty()) lab::set_option(t, "experiment.seed", fl.seed);
    if (fl.threads > 0) lab::set_option(t, "experiment.threads", std::to_string(fl.threads));
    if (fl.lattice_radius > 0) lab::set_option(t, "params.lattice_radius", std::to_string(fl.lattice_radius));
    if (fl.mesh > 0) lab::set_option(t, "params.mesh", lab::format_double(fl.mesh));

    const lab::ExperimentConfig cfg = lab::from_ptree(t);
    const lab::RunReport rep = lab::run(cfg);
    if (!fl.export_quantity.empty()) {
        lab::export_plot_data(rep, fl.export_quantity, std::cout);
    } else {
        for (const auto& path : lab::write_outputs(rep))
            if (!fl.quiet) std::cout << "wrote " << path << '\n';
    }
    if (!fl.quiet) {
        for (const auto& r : rep.records)
            std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << " = " << lab::format_double(r.value) << "  ("
                      << r.criterion << ")\n";
    }
    return rep.pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bilinear multiplier lab"};
    app.require_subcommand(1);

    Flags fl;
    std::optional<lab::Kind> chosen;
    for (lab::Kind k : lab::all_kinds()) {
        auto* sub = app.add_subcommand(lab::to_string(k), "run the " + lab::to_string(k) + " experiment");
        sub->add_option("--config", fl.config, "INI config file")->check(CLI::ExistingFile);
        sub->add_option("--out", fl.out, "output directory");
        sub->add_option("--seed", fl.seed, "random seed");
        sub->add_option("--threads", fl.threads, "worker threads");
        sub->add_option("--lattice-radius", fl.lattice_radius, "frequency lattice radius");
        sub->add_option("--mesh", fl.mesh, "spatial mesh step");
        sub->add_option("--set", fl.sets, "override section.key=value (repeatable)");
        sub->add_option("--export", fl.export_quantity, "print one quantity as CSV instead of writing files");
        sub->add_flag("--quiet", fl.quiet, "no progress output");
        sub->callback([&chosen, k] { chosen = k; });
    }
    std::string default_kind;
    auto* cfg = app.add_subcommand("config", "print the default config of a kind");
    cfg->add_option("kind", default_kind, "experiment kind")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cfg->parsed()) {
            std::cout << lab::serialize(lab::default_config(lab::parse_kind(default_kind)));
            return 0;
        }
        return run_kind(*chosen, fl);
    } catch (const bilab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (e.code() == bilab::Errc::schema) return 2;
        if (e.code() == bilab::Errc::resource) return 3;
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
