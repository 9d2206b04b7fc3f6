#include <iostream>

#include "smartcharge/cli.hpp"

int main(int argc, char** argv) { return smartcharge::cli::run(argc, argv, std::cout, std::cerr); }
