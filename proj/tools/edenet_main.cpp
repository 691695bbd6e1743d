#include <iostream>
#include <string>
#include <vector>

#include "edenet/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return edenet::run_cli(std::move(args), std::cout);
}
