#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qmix/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"qmix: phase mixing toolkit for the Hartree equation near steady states"};
    app.require_subcommand(1);
    std::string config;
    qmix::CommandOptions opt;
    std::string chosen;
    for (const char* name : {"penrose", "linear", "simulate", "sweep-hbar"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON configuration file")->required();
        sub->add_flag("--force", opt.force, "run despite a failed Penrose pre-check");
        sub->add_option("--output", opt.output_dir, "output directory (overrides output_dir)");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : qmix::kExitConfig;
    }
    return qmix::run_command(chosen, config, opt, std::cerr);
}
