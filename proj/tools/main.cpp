#include <iostream>

#include "cogscreen/cli.hpp"

int main(int argc, char** argv) { return cogscreen::cli::run(argc, argv, std::cout, std::cerr); }
