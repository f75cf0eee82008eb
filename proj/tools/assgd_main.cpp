#include <iostream>

#include "assgd/cli.hpp"

int main(int argc, char** argv) { return assgd::run_cli(argc, argv, std::cout, std::cerr); }
