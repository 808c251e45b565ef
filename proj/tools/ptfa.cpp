#include <iostream>

#include "ptfa/cli.hpp"

int main(int argc, char** argv) { return ptfa::cli::run(argc, argv, std::cout, std::cerr); }
