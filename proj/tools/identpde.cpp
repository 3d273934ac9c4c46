#include "identpde/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"identpde: identify PDEs from space-time data"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment spec");
    std::string spec_path;
    std::string out_dir = ".";
    unsigned jobs = 1;
    run->add_option("spec", spec_path, "experiment spec file")->required();
    run->add_option("--out-dir", out_dir, "directory for the artifacts");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 256u));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto spec = identpde::load_experiment(spec_path);
        const auto files = identpde::run_experiment(spec, {out_dir, jobs});
        for (const auto& f : files) std::cout << f.string() << '\n';
        return 0;
    } catch (const identpde::ConfigError& e) {
        std::cerr << spec_path << ": " << e.what() << '\n';
        return 2;
    } catch (const identpde::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
