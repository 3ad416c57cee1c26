#include <iostream>
#include <string>
#include <vector>

#include "volalign/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return volalign::cli::run(args, std::cout, std::cerr);
}
