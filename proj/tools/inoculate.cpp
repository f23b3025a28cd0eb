#include <iostream>

#include "inoculate/cli.hpp"

int main(int argc, char** argv) {
    return inoculate::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
