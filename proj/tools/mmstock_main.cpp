#include <iostream>
#include <string>
#include <vector>

#include "mmstock/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mmstock::cli::run(args, std::cout, std::cerr);
}
