// bow: prepare / train / eval / inspect-reward over the bottlenecked
// next-word training pipeline. Settings come from a flat key = value config
// file; --set flags override file values.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bow/config.hpp"
#include "bow/dispatch.hpp"
#include "bow/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bottlenecked next-word training pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "config file (flat key = value lines)");
    app.add_option("-s,--set", overrides, "override a config key, e.g. --set alpha=0.2")
        ->take_all();

    bow::DispatchArgs args;
    CLI::App* prepare = app.add_subcommand("prepare", "generate or ingest data and filter pairs");
    CLI::App* train = app.add_subcommand("train", "run policy training");
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on an instance file");
    CLI::App* inspect = app.add_subcommand("inspect-reward", "print the reward breakdown for one trajectory");
    inspect->add_option("--context", args.context_text, "context text")->required();
    inspect->add_option("--trajectory", args.trajectory_text, "trajectory text")->required();
    inspect->add_option("--gold", args.gold_word, "gold next word")->required();
    // Let --config/--set appear after the subcommand name as well.
    for (CLI::App* sub : {prepare, train, eval, inspect}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        bow::RunConfig cfg;
        if (!config_path.empty()) cfg = bow::load_config(config_path);
        for (const std::string& entry : overrides) {
            const auto eq = entry.find('=');
            if (eq == std::string::npos) {
                throw bow::ConfigTypeError(entry, "(missing '=')");
            }
            cfg.apply(entry.substr(0, eq), entry.substr(eq + 1));
        }
        const std::string command = app.get_subcommands().front()->get_name();
        return bow::dispatch(command, cfg, args);
    } catch (const std::exception& e) {
        std::cerr << "bow: error: " << e.what() << "\n";
        return 1;
    }
}
