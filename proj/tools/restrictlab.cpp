#include "restrictlab/cli/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

namespace {

using namespace restrictlab;
using namespace restrictlab::cli;

bool use_color() {
    const char* nc = std::getenv("NO_COLOR");
    return (nc == nullptr || *nc == '\0') && ::isatty(STDERR_FILENO);
}

std::string verdict(bool pass) {
    const std::string word = pass ? "PASS" : "FAIL";
    if (!use_color()) return word;
    return std::string(pass ? "\033[32m" : "\033[31m") + word + "\033[0m";
}

int fail(int code, const std::string& msg) {
    std::cerr << "restrictlab: error: " << msg << '\n';
    return code;
}

std::optional<std::string> self_path() {
    std::error_code ec;
    const auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (ec) return std::nullopt;
    return p.string();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"restrictlab: correct restrictions of differential operators, checked numerically"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::size_t> m;
    std::vector<std::string> tols;
    const std::vector<std::string> help{
        "solve L_K u = f for the polynomial rhs on every grid",
        "eigenvalues of L_K and of the formula-assembled A_K",
        "identity residuals and spectra of the similar operator A_K",
        "pairing, spectrum and domain jump conditions of A_K*",
        "norm of KL across grids (bounded for admissible sigma)",
        "Gram conditioning of bracket-normalized root vectors",
        "eigenvalue convergence across grid sizes",
        "run the full acceptance suite",
    };
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < command_names().size(); ++i) {
        const auto& name = command_names()[i];
        auto* sub = app.add_subcommand(name, help[i]);
        auto* cfg = sub->add_option("--config", config_path, "scenario JSON");
        if (name != "selftest") cfg->required();
        sub->add_option("-m", m, "eigenpair count (overrides the config)");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--tol", tols, "tolerance override NAME=VALUE (repeatable)")->take_all();
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    std::string command;
    for (auto* s : subs) {
        if (s->parsed()) command = s->get_name();
    }
    const auto start = std::chrono::steady_clock::now();
    try {
        ScenarioConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (m) {
            if (*m < 1) throw ConfigError("-m must be >= 1");
            cfg.m = *m;
        }
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        for (const auto& t : tols) cfg.tol.set_from_arg(t);

        CommandResult r;
        if (command == "selftest") {
            const auto a = run_acceptance(self_path());
            for (const auto& c : a.criteria) std::cout << summary_line(c) << '\n';
            r.pass = a.all_pass();
            write_atomic(std::filesystem::path(cfg.output_dir) / "selftest.json",
                         json{{"command", "selftest"}, {"criteria", to_json(a)}, {"pass", r.pass}}.dump(2) + "\n");
        } else {
            r = run_command(command, cfg);
            for (const auto& c : r.report["checks"]) {
                std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << " = "
                          << fmt(c["value"].get<double>()) << '\n';
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::fprintf(stderr, "restrictlab %s: %s in %.2f s, reports in %s\n", command.c_str(), verdict(r.pass).c_str(), secs,
                     cfg.output_dir.c_str());
        return r.pass ? kExitOk : kExitCheckFailed;
    } catch (const ConfigError& e) {
        return fail(kExitConfig, e.what());
    } catch (const DegenerateError& e) {
        return fail(kExitDegenerate, std::string(e.what()) + " (measure " + fmt(e.measure()) + ")");
    } catch (const NumericalError& e) {
        return fail(kExitNumerical, e.what());
    } catch (const IoError& e) {
        return fail(kExitIo, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(kExitIo, e.what());
    } catch (const std::exception& e) {
        return fail(kExitNumerical, e.what());
    }
}
