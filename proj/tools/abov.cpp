#include <iostream>

#include "abov/cli.hpp"

int main(int argc, char** argv) { return abov::cli::run(argc, argv, std::cout, std::cerr); }
