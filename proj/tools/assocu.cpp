#include <iostream>

#include "assocu/cli.hpp"

int main(int argc, char** argv) { return assocu::cli::main(argc, argv, std::cout, std::cerr); }
