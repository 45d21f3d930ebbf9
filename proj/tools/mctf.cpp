#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mctf/commands.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

// Flags are collected as a JSON override document and merged over the
// --config file, so a flag always wins over the file.
struct CommonArgs {
    std::string config_path;
    ordered_json overrides = ordered_json::object();
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    auto set_str = [&args](const char* key) {
        return [&args, key](const std::string& v) { args.overrides[key] = v; };
    };
    auto set_int = [&args](const char* key) {
        return [&args, key](std::int64_t v) { args.overrides[key] = v; };
    };
    cmd->add_option_function<std::string>("--preset", set_str("preset"),
                                          "deit-t | deit-s | deit-b");
    cmd->add_option_function<std::int64_t>("--r", set_int("r"), "tokens fused per layer");
    cmd->add_option_function<std::int64_t>("--seed", set_int("seed"), "RNG seed");
    cmd->add_option_function<std::string>("--attention", set_str("attention"),
                                          "approx | precise");
    cmd->add_option_function<std::string>("--matching", set_str("matching"), "bi | oneway");
    cmd->add_option_function<std::string>("--pooling", set_str("pooling"),
                                          "weighted | avg | max");
    cmd->add_option_function<std::string>("--criteria", set_str("criteria"), "s | si | sis");
    cmd->add_option_function<std::string>("--weights", set_str("weights"),
                                          "weight file path, or 'random'");
    cmd->add_option_function<std::string>("--input", set_str("input"),
                                          "input image/tensor path, or 'random'");
    cmd->add_option_function<std::string>("--out", set_str("out"), "output path");
    cmd->add_flag_function(
        "--timing", [&args](std::int64_t) { args.overrides["timing"] = true; },
        "include timing_ms in the report (not byte-reproducible)");
    cmd->add_flag_function(
        "--include-overhead",
        [&args](std::int64_t) { args.overrides["include_overhead"] = true; },
        "fold MCTF overhead MACs into the reported totals");
}

mctf::RunConfig resolve(const CommonArgs& args) {
    ordered_json doc = ordered_json::object();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + args.config_path);
        in >> doc;
    }
    doc.update(args.overrides);
    return mctf::run_config_from_json(doc);
}

std::pair<int, int> parse_sweep(const std::string& text) {
    const auto dots = text.find("..");
    if (dots == std::string::npos)
        throw std::runtime_error("sweep must look like A..B, got: " + text);
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-criteria token fusion engine"};
    app.require_subcommand(1);

    CommonArgs fwd_args, flops_args, viz_args, trace_args;
    std::string sweep_text, layer_csv;
    std::int64_t viz_layer = 0;
    std::uint32_t oracle_seed = 1;
    int oracle_count = 500;

    CLI::App* fwd = app.add_subcommand("forward", "run a forward pass, write a JSON report");
    add_common_options(fwd, fwd_args);

    CLI::App* flops = app.add_subcommand("flops", "MAC totals over an r sweep (JSON + CSV)");
    add_common_options(flops, flops_args);
    flops->add_option("--sweep", sweep_text, "inclusive r range, e.g. 1..20");
    flops->add_option("--layer-csv", layer_csv, "also write the per-layer CSV of the first r");

    CLI::App* oracle = app.add_subcommand("oracle-check",
                                          "compare greedy matching against the exhaustive oracle");
    oracle->add_option("--seed", oracle_seed, "RNG seed");
    oracle->add_option("--count", oracle_count, "number of random instances");

    CLI::App* viz = app.add_subcommand("viz", "SVG map of fused patch groups");
    add_common_options(viz, viz_args);
    viz->add_option("--layer", viz_layer, "compose plans through this many blocks (default all)");

    CLI::App* trace = app.add_subcommand("trace", "full fusion trace as JSON");
    add_common_options(trace, trace_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(fwd)) return mctf::cmd_forward(resolve(fwd_args));
        if (app.got_subcommand(flops)) {
            mctf::RunConfig run = resolve(flops_args);
            if (!sweep_text.empty()) run.sweep = parse_sweep(sweep_text);
            run.layer_csv_path = layer_csv;
            return mctf::cmd_flops(run);
        }
        if (app.got_subcommand(oracle)) return mctf::cmd_oracle_check(oracle_seed, oracle_count);
        if (app.got_subcommand(viz)) {
            mctf::RunConfig run = resolve(viz_args);
            run.viz_layer = static_cast<int>(viz_layer);
            return mctf::cmd_viz(run);
        }
        if (app.got_subcommand(trace)) return mctf::cmd_trace(resolve(trace_args));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
