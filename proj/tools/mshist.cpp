#include <iostream>

#include "mshist/cli.hpp"

int main(int argc, char** argv) { return mshist::cli::main(argc, argv, std::cout, std::cerr); }
