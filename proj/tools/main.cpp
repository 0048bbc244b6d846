#include <iostream>
#include <string>
#include <vector>

#include "cbv/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cbv::run_cli(args, std::cout, std::cerr);
}
