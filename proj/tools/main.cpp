#include <iostream>
#include <vector>

#include "folopt/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return folopt::run_cli(args, std::cout, std::cerr);
}
