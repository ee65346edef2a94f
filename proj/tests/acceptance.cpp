#include "restrictlab/cli/acceptance.hpp"

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    std::optional<std::string> cli;
#ifdef RESTRICTLAB_CLI_PATH
    cli = RESTRICTLAB_CLI_PATH;
#endif
    if (argc > 1) cli = argv[1];
    const auto report = restrictlab::cli::run_acceptance(cli);
    for (const auto& c : report.criteria) std::cout << restrictlab::cli::summary_line(c) << '\n';
    const bool ok = report.all_pass();
    std::cout << (ok ? "all criteria pass" : "some criteria fail") << std::endl;
    return ok ? 0 : 1;
}
