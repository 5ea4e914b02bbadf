// nci_tool: News Cohesiveness Index batch runner.
//
//   nci_tool ingest    --config study.json
//   nci_tool nci       --config study.json [--null-model]
//   nci_tool nullmodel --config study.json
//   nci_tool analyze   --config study.json
//   nci_tool selftest
//
// Exit codes: 0 ok, 1 input error, 2 numerical failure, 3 config error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nci/nci.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::string> out, start, end;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    bool null_model = false;
};

nci::pipeline::RunConfig resolve(const Overrides& o) {
    namespace fs = std::filesystem;
    const fs::path path = o.config;
    auto j = nci::pipeline::read_config_json(path);
    if (!j.is_object()) throw nci::ConfigError("config must be a JSON object");
    if (o.out) j["output_dir"] = fs::absolute(*o.out).string();
    if (o.start) j["start"] = *o.start;
    if (o.end) j["end"] = *o.end;
    if (o.seed) j["seed"] = *o.seed;
    if (o.tol) j["cohesion"]["tol"] = *o.tol;
    if (o.null_model) j["null_model"]["enabled"] = true;
    return nci::pipeline::parse_config(j, path.parent_path());
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "study config (JSON)")->required();
    cmd->add_option("-o,--out", o.out, "override output_dir");
    cmd->add_option("--start", o.start, "override first bucket (YYYY-MM-DD)");
    cmd->add_option("--end", o.end, "override last bucket (YYYY-MM-DD)");
    cmd->add_option("--seed", o.seed, "override global seed");
    cmd->add_option("--tol", o.tol, "override cohesion.tol");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"News Cohesiveness Index toolkit"};
    app.set_version_flag("--version", std::string(NCI_VERSION));
    app.require_subcommand(1);

    Overrides o;
    auto* ingest = app.add_subcommand("ingest", "annotate, filter and bucket documents into matrices");
    auto* nci_cmd = app.add_subcommand("nci", "NCI, NCI-financial and partition series from matrices");
    auto* nullmodel = app.add_subcommand("nullmodel", "degree-preserving null-model z-scores");
    auto* analyze = app.add_subcommand("analyze", "alignment, correlation, Granger causality and plots");
    auto* selftest = app.add_subcommand("selftest", "run embedded analytic fixtures");
    for (auto* c : {ingest, nci_cmd, nullmodel, analyze}) add_common(c, o);
    nci_cmd->add_flag("--null-model", o.null_model, "also run the null model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(nci::ErrorKind::config);
    }

    try {
        if (selftest->parsed()) return nci::pipeline::selftest(std::cout) ? 0 : 2;
        const auto cfg = resolve(o);
        if (ingest->parsed()) nci::pipeline::cmd_ingest(cfg, std::cerr);
        else if (nci_cmd->parsed()) nci::pipeline::cmd_nci(cfg, std::cerr);
        else if (nullmodel->parsed()) nci::pipeline::cmd_nullmodel(cfg, std::cerr);
        else if (analyze->parsed()) nci::pipeline::cmd_analyze(cfg, std::cerr);
        return 0;
    } catch (const nci::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(nci::ErrorKind::input);
    }
}
