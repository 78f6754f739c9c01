#include <iostream>
#include <string>
#include <vector>

#include "apextrack/cli/commands.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return apextrack::cli::run_cli(args, std::cout, std::cerr);
}
