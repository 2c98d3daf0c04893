#include <iostream>

#include "ipop/cli.hpp"

int main(int argc, char** argv) {
    return ipop::cli::main_entry(argc, argv, std::cout, std::cerr);
}
