#pragma once

#include <CLI11.hpp>

#include <cstdlib>

#include "unitlint/driver.hpp"

namespace unitlint {

/// Full command-line front end; returns the process exit code. Split from
/// main() so tests can drive it with argument vectors and captured streams.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"unitlint: physical-unit and frame-of-reference checker"};
    app.require_subcommand(1);

    std::string protocol, qoi, db, scenario, out_path, format, config_path;
    bool no_dedup = false;
    double eps_approx = 0.0;
    std::vector<std::string> ignore_fns;
    std::string program, trace;
    std::vector<std::string> programs;

    auto add_common = [&](CLI::App* sub) {
        struct Opts {
            CLI::Option *protocol, *qoi, *db, *scenario, *out, *format, *config, *eps, *dedup;
        } o{};
        o.protocol = sub->add_option("--protocol", protocol, "Protocol XML path");
        o.qoi = sub->add_option("--qoi", qoi, "QOI declarations path");
        o.db = sub->add_option("--db", db, "Type database path");
        o.scenario = sub->add_option("--scenario", scenario, "Scenario path");
        o.out = sub->add_option("--out", out_path, "Output path");
        o.format = sub->add_option("--format", format, "Output format: human|json")
                       ->check(CLI::IsMember({"human", "json"}));
        o.config = sub->add_option("--config", config_path, "Config file path");
        o.eps = sub->add_option("--eps-approx", eps_approx, "Approximate-rule tolerance");
        sub->add_option("--ignore-fn", ignore_fns, "Function to skip during inference");
        o.dedup = sub->add_flag("--no-dedup", no_dedup, "Report duplicate findings");
        return o;
    };

    CLI::App* run = app.add_subcommand("run", "Interpret a program under a scenario");
    run->add_option("program", program, "Program file")->required();
    auto run_opts = add_common(run);

    CLI::App* deduce = app.add_subcommand("deduce", "Mine a type database from a trace");
    deduce->add_option("trace", trace, "Trace CSV file")->required();
    auto deduce_opts = add_common(deduce);

    CLI::App* check = app.add_subcommand("check", "Statically check programs");
    check->add_option("programs", programs, "Program files")->required();
    auto check_opts = add_common(check);

    CLI::App* dump = app.add_subcommand("dump-constraints", "Print the constraint stream");
    dump->add_option("programs", programs, "Program files")->required();
    auto dump_opts = add_common(dump);

    std::vector<const char*> argv;
    argv.push_back("unitlint");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kExitInputError;
    }

    CLI::App* sub = app.get_subcommands().front();
    auto opts = sub == run      ? run_opts
                : sub == deduce ? deduce_opts
                : sub == check  ? check_opts
                                : dump_opts;

    CliConfig cfg;
    std::string effective_config = config_path;
    if (effective_config.empty()) {
        if (const char* env = std::getenv("UNITLINT_CONFIG")) effective_config = env;
    }
    if (!effective_config.empty()) {
        std::string text;
        if (auto e = detail::read_file(effective_config, text)) {
            err << *e << '\n';
            return kExitInputError;
        }
        if (auto e = apply_config_text(text, cfg)) {
            err << effective_config << ": " << *e << '\n';
            return kExitInputError;
        }
    }
    // Command-line flags override config-file values; ignore lists add up.
    if (opts.protocol->count()) cfg.protocol = protocol;
    if (opts.qoi->count()) cfg.qoi = qoi;
    if (opts.db->count()) cfg.db = db;
    if (opts.scenario->count()) cfg.scenario = scenario;
    if (opts.out->count()) cfg.out = out_path;
    if (opts.format->count()) cfg.format = format;
    if (opts.eps->count()) cfg.mining.eps_approx = eps_approx;
    if (opts.dedup->count()) cfg.dedup = false;
    for (const auto& fn : ignore_fns) cfg.extra_ignore_fns.insert(fn);
    cfg.program = program;
    cfg.trace = trace;
    cfg.programs = programs;

    if (sub == run) return cmd_run(cfg, out, err);
    if (sub == deduce) return cmd_deduce(cfg, out, err);
    if (sub == check) return cmd_check(cfg, out, err);
    return cmd_dump_constraints(cfg, out, err);
}

}  // namespace unitlint
