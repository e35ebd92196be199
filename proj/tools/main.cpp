#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "discountlab/instances.hpp"
#include "discountlab/zoo.hpp"
#include "experiment.hpp"

using namespace discountlab;

namespace {

int run_command(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << nlohmann::json{{"error", {{"code", "IOError"},
                                               {"message", "cannot open " + config_path}}}}
                  << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    cli::ExperimentSpec spec;
    try {
        spec = cli::parse_config(buf.str());
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"error", {{"code", to_string(e.code())},
                                               {"message", e.what()}}}}
                  << "\n";
        return 2;
    }
    cli::ExitReport report = cli::run_experiment(spec);
    if (report.exit_code == 2 || !report.error.empty())
        std::cerr << report.result.dump() << "\n";
    const auto& r = report.result;
    if (r.contains("audits"))
        for (auto& [name, ok] : r["audits"].items())
            std::cout << (ok.get<bool>() ? "pass  " : "FAIL  ") << name << "\n";
    std::cout << "exit " << report.exit_code << "  (" << spec.output_dir << "/result.json)\n";
    return report.exit_code;
}

int verify_command(const std::string& path) {
    try {
        DiscreteSystem sys = cli::load_system(path);
        MonotoneCertificate cert = certify_monotone(sys, 0.0);
        nlohmann::json out = {{"label", sys.label},
                              {"unknowns", sys.unknowns()},
                              {"certificate", cert.holds},
                              {"min_diagonal_margin", cert.min_diagonal_margin},
                              {"min_row_sum_margin", cert.min_row_sum_margin},
                              {"max_offdiagonal", cert.max_offdiagonal}};
        std::cout << out.dump(2) << "\n";
        return cert.holds ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"error", {{"code", to_string(e.code())},
                                               {"message", e.what()}}}}
                  << "\n";
        return e.code() == Errc::Io || e.code() == Errc::BadSystemFile ? 2 : 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discounted and ergodic weakly coupled HJ systems on the torus"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("config", config_path, "Config file")->required();

    auto* zoo_cmd = app.add_subcommand("zoo", "Built-in instances");
    zoo_cmd->require_subcommand(1);
    auto* list = zoo_cmd->add_subcommand("list", "List instance ids");
    std::string export_id, export_path;
    int export_N = 0;
    auto* exp = zoo_cmd->add_subcommand("export", "Write an instance as system JSON");
    exp->add_option("id", export_id)->required();
    exp->add_option("path", export_path)->required();
    exp->add_option("--N", export_N, "Grid points per dimension");

    std::string system_path;
    auto* verify = app.add_subcommand("verify", "Re-verify a serialized system");
    verify->add_option("system", system_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*run) return run_command(config_path);
    if (*verify) return verify_command(system_path);
    if (*list) {
        for (const auto& e : zoo::catalog()) std::cout << e.id << "\t" << e.summary << "\n";
        return 0;
    }
    if (*exp) {
        try {
            auto opts = instances::default_options(export_id);
            if (export_N > 0) opts.N = export_N;
            nlohmann::json j = instances::from_zoo(export_id, opts);
            std::ofstream out(export_path);
            if (!out) throw Error(Errc::Io, "cannot write " + export_path);
            out << j.dump(2) << "\n";
            return 0;
        } catch (const Error& e) {
            std::cerr << e.what() << "\n";
            return 2;
        }
    }
    return 2;
}
