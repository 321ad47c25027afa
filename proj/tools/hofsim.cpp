#include <iostream>

#include "hofsim/cli.hpp"

int main(int argc, char** argv) { return hofsim::cli::run(argc, argv, std::cout, std::cerr); }
