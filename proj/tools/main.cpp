#include <iostream>
#include <string>
#include <vector>

#include "tsentinel/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return tsentinel::cli::run(args, std::cout, std::cerr);
}
