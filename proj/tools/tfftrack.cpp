#include <iostream>
#include <string>
#include <vector>

#include "tfftrack/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tfftrack::cli::run(args, std::cout, std::cerr);
}
