#include <iostream>

#include "kbv/cli.hpp"

int main(int argc, char** argv) { return kbv::cli::main(argc, argv, std::cout, std::cerr); }
